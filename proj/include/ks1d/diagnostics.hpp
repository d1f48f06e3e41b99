#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ks1d/integrate.hpp"
#include "ks1d/state.hpp"

// Monitored quantities for an inner window I = [q,p] against its complement
// O: the windowed variance Pi^2_I, the exterior interaction potentials
// H_{IO,m} = sum_{j in O, i in I} (X_j - X_i)^-m, the differential
// certificates they satisfy along trajectories, and the stability-set
// machinery (membership test, explicit constants alpha, beta, C_N).

namespace ks {

struct WindowStats {
    IndexWindow window;
    double mean = 0;
    double variance = 0;  // sum of squared deviations from the window mean
    std::optional<double> variance_about;  // about a supplied fixed point
};

WindowStats window_stats(std::span<const double> x, IndexWindow w,
                         std::optional<double> about = {});
WindowStats window_stats(const ParticleState& s, IndexWindow w,
                         std::optional<double> about = {});

struct ExteriorPotential {
    IndexWindow window;
    int order = 2;  // m in {2, 4}
    double value = 0;
};

ExteriorPotential exterior_potential(std::span<const double> x, int n_total, IndexWindow w,
                                     int m);
ExteriorPotential exterior_potential(const ParticleState& s, IndexWindow w, int m);

// Explicit constants for the stability basin at the rung
// chi_N^k < chi < chi_N^{k-1}:
//   alpha   = (k-1) (chi/chi_N^k - 1)
//   gamma_N = C42 (12 + 14 chi + 4 N^{1/4})         (H-growth constant)
//   C_N     = min( alpha / (2 gamma_N), (1/8) alpha^2 / (2 + 2 chi/sqrt(N)) )
//   beta    = 4 gamma_N C_N^2
// with C42 = 1 (the l4 norm never exceeds the l2 norm).
struct StabilityConstants {
    double alpha = 0;
    double beta = 0;
    double c_n = 0;
    double c42 = 1.0;
    double gamma_n = 0;

    double blowup_time_bound(double t0, double eps) const { return t0 + eps / alpha; }
};

StabilityConstants stability_constants(int n, double chi, int k);

// First contiguous window of size k with Pi^2 <= eps and H_{IO,2} < C_N/eps,
// if any.
std::optional<IndexWindow> stability_membership(const ParticleState& s, int k, double eps);

// Per-frame residuals of the three evolution estimates for a window along a
// trajectory; time derivatives by centered differences on the non-uniform
// frame grid. A residual <= 0 means the inequality holds; positive values up
// to `slack` are finite-difference noise. With an empty exterior the variance
// estimates collapse to the exact second-moment law and the H certificate is
// skipped.
struct Lemma32Residuals {
    std::vector<double> r_variance;        // |d Pi^2/2dt - drift| - envelope
    std::vector<double> r_variance_about;  // same for Pi^2 about a fixed point
    std::vector<double> r_h_growth;        // dH2/dt - gamma_N H2^2
    std::vector<double> slack;             // per-frame allowance
    std::vector<double> times;
    bool all_within_slack = true;
};

Lemma32Residuals lemma32_residuals(const Trajectory& traj, IndexWindow w,
                                   std::optional<double> about = {},
                                   double slack_factor = 1e-3);

// sum_{i in I} sum_{j in I, j != i} (X_i - mean_I) / (X_j - X_i); equals
// -(w-1)w/2 identically for any window of size w.
double t1_pair_identity(std::span<const double> x, IndexWindow w);

}  // namespace ks
