#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "ks1d/integrate.hpp"

// Complete analysis of three interacting particles through the relative
// distances u1 = X2 - X1, u2 = X3 - X2:
//
//   du1 = 2/u1 - 1/u2 - 2 chi h3 (2/u1 - 1/u2 + 1/(u1+u2))
//   du2 = 2/u2 - 1/u1 - 2 chi h3 (2/u2 - 1/u1 + 1/(u1+u2)),     h3 = 1/4,
//
// and their self-similar counterparts (v1, v2) carrying an extra +alpha v_i
// with alpha = 2 (chi/chi_3 - 1), chi_3 = 4/3. Blow-up regimes change at
// chi_3 (onset), chi_bar = 16/9 (profile symmetry breaking) and
// chi_3^2 = 2 (pair collapse takes over, rate alpha_bar = chi - 2).
// On the unit sphere the rescaled flow is confined to the curve
// v1^2 + v2^2 + v1 v2 = 3/2.

namespace ks {

enum class ThreeBodyRegime { subcritical, triple_symmetric, triple_asymmetric, rung, pair };

struct ThreeBodyParams {
    double chi = 0;
    double h3 = 0.25;
    double alpha3 = 0;     // 2 (chi/chi_3 - 1)
    double alpha_bar = 0;  // chi - 2
    ThreeBodyRegime regime = ThreeBodyRegime::subcritical;
};

ThreeBodyParams threebody_params(double chi);

std::pair<double, double> u_rhs(double u1, double u2, double chi);
std::pair<double, double> v_rhs(double v1, double v2, double chi);

// constraint curve q(v) = v1^2 + v2^2 + v1 v2 = 3/2
double curve_residual(double v1, double v2);
// the above-diagonal curve point with the given v1 in (0, sqrt(2)/2]
std::pair<double, double> curve_point_above(double v1);
// radial projection back onto the curve
std::pair<double, double> project_to_curve(double v1, double v2);

struct FixedPointSet {
    std::pair<double, double> symmetric;  // (sqrt2/2, sqrt2/2)
    std::optional<std::pair<double, double>> asymmetric;  // v1 < v2 branch
    double product = 0;  // v1 v2 at stationarity: 3 (1 - 2 chi h3) / alpha
    bool merged = false; // chi within 1e-4 of chi_bar = 16/9
};

FixedPointSet fixed_points(double chi);

// Eigenvalue of the curve-restricted linearization at a stationary point
// (numerical tangential differentiation).
double restricted_eigenvalue(double chi, std::pair<double, double> point,
                             double h = 1e-6);

// Embeddings between relative distances and particle configurations.
std::vector<double> u_embed(double u1, double u2);            // (0, u1, u1+u2)
std::vector<double> v_embed(double v1, double v2);            // zero-mean
std::pair<double, double> gaps_of(std::span<const double> x);

Trajectory integrate_u(double chi, std::pair<double, double> u0,
                       const IntegratorConfig& cfg);
// project=true renormalizes each accepted state back to the constraint curve,
// killing the normal instability of the self-similar frame; drift monitoring
// requires project=false.
Trajectory integrate_v(double chi, std::pair<double, double> v0,
                       const IntegratorConfig& cfg, bool project = false,
                       std::optional<double> alpha_override = {});

struct LiouvilleOptions {
    double tau_end = 20.0;
    double tol = 1e-12;          // integrator tolerance
    double drift_tol = 1e-6;     // max allowed curve drift (projection off)
    double conv_tol = 1e-5;      // distance to the attracting point at tau_end
    double align_tol = 1e-5;     // translate property sup-difference
    double fiducial = 0.5;       // preferred v1 alignment crossing
};

struct LiouvilleResult {
    bool on_curve_ok = false;
    bool convergence_ok = false;
    bool translates_ok = false;
    double max_drift = 0;
    double worst_endpoint_dist = 0;
    double worst_translate_diff = 0;
    std::vector<int> branch;  // per grid point: 0 = left of attractor, 1 = right

    bool all_ok() const { return on_curve_ok && convergence_ok && translates_ok; }
};

// Integrates v from each grid point without projection, checks the curve is
// preserved, that everything lands on the regime's attracting point, and that
// same-branch trajectories are time translates of each other after aligning
// at a common v1 crossing.
LiouvilleResult liouville_check(double chi, const std::vector<std::pair<double, double>>& grid,
                                const LiouvilleOptions& opts = {});

struct PairCollapseAnalysis {
    double alpha_bar = 0;
    std::array<std::array<double, 2>, 2> linearization{};  // in (v1-1, 1/v2)
    std::pair<double, double> eigenvalues;                  // (2 alpha_bar, -alpha_bar)
    double t_hat = 0;
    double v1_final = 0;
    double v2_log_slope = 0;          // expect alpha_bar
    bool u2_minus_u1_monotone = false;
    double translate_sup_diff = 0;    // two runs aligned on the stable manifold
};

PairCollapseAnalysis pair_collapse_analysis(double chi,
                                            std::pair<double, double> u0 = {0.4, 0.9},
                                            std::pair<double, double> u0_alt = {0.3, 1.1});

}  // namespace ks
