#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ks1d/ddtime.hpp"
#include "ks1d/state.hpp"

namespace ks {

struct IntegratorConfig {
    double dt_init = 1e-4;
    double safety = 0.2;        // gap-cap factor, in (0,1)
    double gap_stop = 0.0;      // absolute stopping gap when > 0
    double gap_stop_rel = 0.0;  // else this fraction of the initial min gap,
                                // defaulting to 1e-6
    double t_max = 1e3;
    double tol = 1e-10;  // relative local-error tolerance
    double atol = 0.0;   // absolute floor for the error scale
    int monitor_stride = 4;
    long max_steps = 20'000'000;
};

enum class StopReason { gap_collapse, horizon, step_underflow };

const char* to_string(StopReason r);

// Frames emitted by the integrator at accepted steps (every monitor_stride-th
// step plus first and last). Times are carried in compensated form.
class Trajectory {
  public:
    int n = 0;
    double chi = 0;
    double alpha = 0;  // confinement coefficient (0 for the physical flow)
    StopReason stop_reason = StopReason::horizon;
    long steps_accepted = 0;
    long steps_rejected = 0;
    double gap_stop_used = 0;

    int frames() const { return static_cast<int>(times_.size()); }
    double time(int k) const { return times_[static_cast<std::size_t>(k)].value(); }
    DDouble time_dd(int k) const { return times_[static_cast<std::size_t>(k)]; }
    // t_end - t_k, exact where it matters
    double time_from_end(int k) const {
        return dd_sub(times_.back(), times_[static_cast<std::size_t>(k)]);
    }
    std::span<const double> frame(int k) const {
        return {data_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(n),
                static_cast<std::size_t>(n)};
    }
    double min_gap(int k) const;
    ParticleState state(int k) const;

    void push_frame(DDouble t, std::span<const double> y);

  private:
    std::vector<DDouble> times_;
    std::vector<double> data_;  // frames x n
};

// Right-hand side family: the physical gradient flow when alpha == 0, the
// self-similar-frame flow (extra +alpha*Y term) otherwise.
struct FlowSpec {
    double chi = 1.0;
    double alpha = 0.0;

    // Applied to each accepted state before recording (used by constrained
    // phase-portrait experiments to re-project onto an invariant manifold).
    std::function<void(std::vector<double>&)> post_step;
};

Trajectory integrate_flow(const std::vector<double>& x0, const FlowSpec& flow,
                          const IntegratorConfig& cfg);

// Physical gradient flow from an admissible state.
Trajectory integrate(const ParticleState& s0, const IntegratorConfig& cfg);

// Worst deviation of Pi^2(t) = sum X_i^2 from the exact linear law
//   Pi^2(t) = Pi^2(0) + 2 (N-1) (1 - chi h_N N) t,
// normalized by the law's largest magnitude over the checked frames. Frames
// whose minimal gap is below min_gap_floor are excluded.
double second_moment_law_check(const Trajectory& traj, double min_gap_floor = 0.0);

enum class FitMethod { min_gap_quadratic_fit, variance_linear_fit };

struct BlowUpTimeEstimate {
    double t_hat = 0;
    FitMethod method = FitMethod::min_gap_quadratic_fit;
    double residual = 0;        // rms fit residual / fitted-value span
    double t_hat_minus_end = 0; // exact small offset t_hat - t_end
    std::optional<double> t_hat_cross;  // variance-fit cross-check
};

// Least-squares root of (min gap)^2 against t over the final window of
// frames (default last 20%); when an inner window is supplied the variance
// Pi^2_I is fitted the same way as a cross-check.
BlowUpTimeEstimate estimate_blowup_time(const Trajectory& traj,
                                        std::optional<IndexWindow> inner = {},
                                        double window_frac = 0.2);

}  // namespace ks
