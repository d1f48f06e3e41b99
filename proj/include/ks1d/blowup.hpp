#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ks1d/diagnostics.hpp"
#include "ks1d/integrate.hpp"
#include "ks1d/state.hpp"

// Blow-up set detection over the final stretch of a collapsed trajectory,
// weak/strong classification, comparison against the critical particle count,
// and the stability-basin experiment: data built inside
// D^{eps, C_N/eps} must aggregate exactly k particles, before t0 + eps/alpha,
// while staying inside the drifting family D^{eps - s alpha, C_N/eps + s beta/eps^2}.

namespace ks {

enum class BlowUpClass { weak, strong };

struct BlowUpSet {
    IndexWindow window;
    BlowUpClass classification = BlowUpClass::weak;
    double boundary_clearance = 0;  // min late-time inner-outer distance (1/c)
    double x_bar = 0;               // late-time window mean
};

struct BlowUpReport {
    double t_hat = 0;
    FitMethod method = FitMethod::min_gap_quadratic_fit;
    std::vector<BlowUpSet> sets;
    int k_expected = 0;  // from the critical ladder (0 if not interior)
    bool quantization_verdict = false;  // every set has exactly k_expected particles
};

struct DetectionConfig {
    // A gap collapses when its windowed minimum over the last fifth of the
    // frames falls below gap_tol * (initial min gap). A set is strong when
    // every one of its gaps also keeps its windowed maximum below
    // 10 * gap_tol * (initial min gap) — a finite-time stand-in for lim vs
    // liminf — and the boundary gaps never drop below
    // clearance_tol * (initial min gap) over those frames.
    //
    // gap_tol <= 0 picks a depth-aware threshold: two hundred times the
    // achieved collapse ratio, at least 1e-3. Collapsing sets spread their
    // gaps (a factor ~70 for a 31-particle profile), so the threshold must
    // sit above the spread times the final ratio, and well below any
    // surviving separation.
    double gap_tol = 0.0;
    double clearance_tol = 5e-2;
    double window_frac = 0.2;
};

// the threshold actually used for a given trajectory (resolves the default)
double detection_gap_tol(const Trajectory& traj, const DetectionConfig& cfg);

BlowUpReport detect_blowup_sets(const Trajectory& traj, const DetectionConfig& cfg = {});

// Every detected set must carry at least the critical count.
bool minimal_cardinality_check(const BlowUpReport& report, const CriticalLadder& ladder);

// Empirical form of "a weak blow-up set of k particles is strong": any weak
// set with exactly k_expected particles must reclassify as strong when
// detection is repeated at a finer scale (a tenth of the gap threshold, a
// quarter of the trailing window). Returns false only on a counterexample;
// sets the flag when at least one weak k-set was examined.
struct StrengthenResult {
    bool applicable = false;
    bool ok = true;
};
StrengthenResult weak_k_sets_strengthen(const Trajectory& traj, const DetectionConfig& cfg);

// Initial data for the basin: k particles equally spaced over width
// sqrt(eps/k) centered at 0, the rest equally spaced at distance
// margin * sqrt(k eps / C_N) and beyond, then a per-seed 1%-of-local-spacing
// uniform jitter.
ParticleState clustered_initial_data(int n, double chi, int k, double eps,
                                     double margin = 4.0,
                                     std::optional<std::uint64_t> jitter_seed = {});

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool membership_at_start = false;
    bool quantization = false;
    bool time_bound_ok = false;
    bool nested_membership_ok = false;  // per-frame drifting D-membership
    double t_hat = 0;
    int frames_checked = 0;
    std::string failure;  // nonempty if the run errored
};

struct ExperimentSummary {
    int n = 0;
    double chi = 0;
    int k = 0;
    double eps = 0;
    StabilityConstants constants;
    std::vector<SeedOutcome> outcomes;
    int quantized = 0;   // seeds with exactly-k strong sets
    int succeeded = 0;   // seeds passing all three checks
};

struct ExperimentConfig {
    IntegratorConfig integrator;
    DetectionConfig detection;
    double margin = 4.0;
    int workers = 1;
    double membership_slack = 1e-6;  // relative allowance on the frame checks
};

ExperimentSummary stability_experiment(int n, double chi, int k, double eps,
                                       int seed_count, std::uint64_t master_seed,
                                       const ExperimentConfig& cfg = {});

}  // namespace ks
