#include "ks1d/blowup.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "ks1d/model.hpp"
#include "ks1d/rng.hpp"

namespace ks {

double detection_gap_tol(const Trajectory& traj, const DetectionConfig& cfg) {
    if (cfg.gap_tol > 0) return cfg.gap_tol;
    const double ratio = traj.min_gap(traj.frames() - 1) / traj.min_gap(0);
    return std::max(1e-3, 200.0 * ratio);
}

BlowUpReport detect_blowup_sets(const Trajectory& traj, const DetectionConfig& cfg) {
    if (traj.stop_reason != StopReason::gap_collapse)
        throw ConfigError("detect_blowup_sets: trajectory did not stop on gap collapse");
    const int K = traj.frames();
    const int n = traj.n;
    const int W = std::max(3, static_cast<int>(std::ceil(cfg.window_frac * K)));
    const int first = std::max(0, K - W);
    const double g0 = traj.min_gap(0);
    const double thresh = detection_gap_tol(traj, cfg) * g0;
    const double clearance_floor = cfg.clearance_tol * g0;

    const int ngaps = n - 1;
    std::vector<double> wmin(static_cast<std::size_t>(ngaps),
                             std::numeric_limits<double>::infinity());
    std::vector<double> wmax(static_cast<std::size_t>(ngaps), 0.0);
    for (int k = first; k < K; ++k) {
        const auto y = traj.frame(k);
        for (int i = 0; i < ngaps; ++i) {
            const double g = y[static_cast<std::size_t>(i) + 1] - y[static_cast<std::size_t>(i)];
            wmin[static_cast<std::size_t>(i)] = std::min(wmin[static_cast<std::size_t>(i)], g);
            wmax[static_cast<std::size_t>(i)] = std::max(wmax[static_cast<std::size_t>(i)], g);
        }
    }

    std::vector<bool> collapsing(static_cast<std::size_t>(ngaps));
    bool any = false;
    for (int i = 0; i < ngaps; ++i) {
        collapsing[static_cast<std::size_t>(i)] = wmin[static_cast<std::size_t>(i)] < thresh;
        any = any || collapsing[static_cast<std::size_t>(i)];
    }
    if (!any)
        throw NumericalError(
            "detect_blowup_sets: no collapsing pair despite gap-collapse stop "
            "(inconsistent thresholds)");

    BlowUpReport rep;
    const auto final_frame = traj.frame(K - 1);

    int i = 0;
    while (i < ngaps) {
        if (!collapsing[static_cast<std::size_t>(i)]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < ngaps && collapsing[static_cast<std::size_t>(j) + 1]) ++j;
        // gap run [i, j] joins particles [i+1, j+2] in 1-based indexing
        BlowUpSet set;
        set.window = IndexWindow{i + 1, j + 2};

        bool fully_collapsed = true;
        for (int g = i; g <= j; ++g)
            fully_collapsed =
                fully_collapsed && wmax[static_cast<std::size_t>(g)] < 10.0 * thresh;

        double clearance = std::numeric_limits<double>::infinity();
        if (i - 1 >= 0) clearance = std::min(clearance, wmin[static_cast<std::size_t>(i) - 1]);
        if (j + 1 < ngaps) clearance = std::min(clearance, wmin[static_cast<std::size_t>(j) + 1]);
        set.boundary_clearance = clearance;

        const bool cleared = clearance >= clearance_floor;
        set.classification =
            (fully_collapsed && cleared) ? BlowUpClass::strong : BlowUpClass::weak;

        double mean = 0;
        for (int q = set.window.lo0(); q <= set.window.hi0(); ++q)
            mean += final_frame[static_cast<std::size_t>(q)];
        set.x_bar = mean / set.window.size();

        rep.sets.push_back(set);
        i = j + 2;  // the gap after a collapsing run is non-collapsing
    }

    const auto est = estimate_blowup_time(traj, rep.sets.front().window);
    rep.t_hat = est.t_hat;
    rep.method = est.method;

    const auto ladder = critical_ladder(n, traj.chi);
    rep.k_expected =
        ladder.position == CriticalLadder::Position::subcritical ? 0 : ladder.k_star;
    rep.quantization_verdict = rep.k_expected >= 2;
    for (const auto& s : rep.sets)
        rep.quantization_verdict =
            rep.quantization_verdict && s.window.size() == rep.k_expected;
    return rep;
}

bool minimal_cardinality_check(const BlowUpReport& report, const CriticalLadder& ladder) {
    if (report.sets.empty()) throw ConfigError("minimal_cardinality_check: empty report");
    if (ladder.position == CriticalLadder::Position::subcritical) return true;
    for (const auto& s : report.sets) {
        if (s.window.size() < ladder.k_star) return false;
    }
    return true;
}

StrengthenResult weak_k_sets_strengthen(const Trajectory& traj, const DetectionConfig& cfg) {
    const auto rep = detect_blowup_sets(traj, cfg);
    StrengthenResult out;
    DetectionConfig finer = cfg;
    finer.gap_tol = detection_gap_tol(traj, cfg) / 10.0;
    finer.window_frac = cfg.window_frac / 4.0;
    for (const auto& s : rep.sets) {
        if (s.classification != BlowUpClass::weak || s.window.size() != rep.k_expected)
            continue;
        out.applicable = true;
        const auto finer_rep = detect_blowup_sets(traj, finer);
        bool strengthened = false;
        for (const auto& f : finer_rep.sets) {
            if (f.window == s.window && f.classification == BlowUpClass::strong)
                strengthened = true;
        }
        out.ok = out.ok && strengthened;
    }
    return out;
}

ParticleState clustered_initial_data(int n, double chi, int k, double eps, double margin,
                                     std::optional<std::uint64_t> jitter_seed) {
    if (k < 2 || k > n) throw ConfigError("clustered_initial_data: need 2 <= k <= n");
    if (!(eps > 0)) throw ConfigError("clustered_initial_data: eps > 0");
    const auto c = stability_constants(n, chi, k);

    const double w = std::sqrt(eps / k);
    const double d = margin * std::sqrt(k * eps / c.c_n);
    const int n_out = n - k;
    const int n_left = n_out / 2;
    const int n_right = n_out - n_left;

    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(n));
    for (int j = n_left; j >= 1; --j) x.push_back(-d * j);
    for (int i = 0; i < k; ++i) x.push_back(-0.5 * w + w * i / (k - 1.0));
    for (int j = 1; j <= n_right; ++j) x.push_back(d * j);

    if (jitter_seed) {
        SplitMix64 rng(*jitter_seed);
        std::vector<double> jittered = x;
        for (int i = 0; i < n; ++i) {
            double local = std::numeric_limits<double>::infinity();
            if (i > 0) local = std::min(local, x[static_cast<std::size_t>(i)] -
                                                   x[static_cast<std::size_t>(i) - 1]);
            if (i + 1 < n) local = std::min(local, x[static_cast<std::size_t>(i) + 1] -
                                                       x[static_cast<std::size_t>(i)]);
            jittered[static_cast<std::size_t>(i)] += rng.uniform(-0.01, 0.01) * local;
        }
        x = std::move(jittered);
    }
    return ParticleState(std::move(x), chi);
}

namespace {

SeedOutcome run_seed(int n, double chi, int k, double eps, std::uint64_t seed,
                     const StabilityConstants& c, const ExperimentConfig& cfg) {
    SeedOutcome out;
    out.seed = seed;
    try {
        const auto state = clustered_initial_data(n, chi, k, eps, cfg.margin, seed);
        const int n_left = (n - k) / 2;
        const IndexWindow inner{n_left + 1, n_left + k};

        const auto st0 = window_stats(state, inner);
        const double h0 = exterior_potential(state, inner, 2).value;
        out.membership_at_start = st0.variance <= eps && h0 < c.c_n / eps;
        if (!out.membership_at_start)
            throw ConfigError("stability_experiment: constructed data left the basin");

        const auto traj = integrate(state, cfg.integrator);
        if (traj.stop_reason != StopReason::gap_collapse) {
            out.failure = "no gap collapse before the horizon";
            return out;
        }
        const auto rep = detect_blowup_sets(traj, cfg.detection);
        out.t_hat = rep.t_hat;
        out.quantization = rep.sets.size() == 1 && rep.sets[0].window == inner &&
                           rep.sets[0].classification == BlowUpClass::strong &&
                           rep.sets[0].window.size() == k;
        out.time_bound_ok = rep.t_hat <= c.blowup_time_bound(0.0, eps) * (1.0 + 1e-9);

        // frame-by-frame membership in the drifting basin
        out.nested_membership_ok = true;
        const double slack = cfg.membership_slack;
        for (int f = 0; f < traj.frames(); ++f) {
            const double s = traj.time(f);
            if (s >= rep.t_hat) break;
            const auto st = window_stats(traj.frame(f), inner);
            const double h2 = exterior_potential(traj.frame(f), n, inner, 2).value;
            const double var_bound = eps - s * c.alpha;
            const double h_bound = c.c_n / eps + s * c.beta / (eps * eps);
            if (st.variance > var_bound * (1.0 + slack) ||
                h2 >= h_bound * (1.0 + slack)) {
                out.nested_membership_ok = false;
                break;
            }
            ++out.frames_checked;
        }
    } catch (const std::exception& e) {
        out.failure = e.what();
    }
    return out;
}

}  // namespace

ExperimentSummary stability_experiment(int n, double chi, int k, double eps, int seed_count,
                                       std::uint64_t master_seed,
                                       const ExperimentConfig& cfg) {
    ExperimentSummary sum;
    sum.n = n;
    sum.chi = chi;
    sum.k = k;
    sum.eps = eps;
    sum.constants = stability_constants(n, chi, k);

    sum.outcomes.resize(static_cast<std::size_t>(seed_count));
    const int workers = std::max(1, cfg.workers);
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    auto body = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= seed_count) break;
            sum.outcomes[static_cast<std::size_t>(i)] =
                run_seed(n, chi, k, eps, derive_seed(master_seed, static_cast<std::uint64_t>(i)),
                         sum.constants, cfg);
        }
    };
    if (workers == 1) {
        body();
    } else {
        for (int t = 0; t < workers; ++t) pool.emplace_back(body);
        for (auto& th : pool) th.join();
    }

    for (const auto& o : sum.outcomes) {
        if (o.quantization) ++sum.quantized;
        if (o.quantization && o.time_bound_ok && o.nested_membership_ok) ++sum.succeeded;
    }
    return sum;
}

}  // namespace ks
