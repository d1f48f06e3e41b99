#include "ks1d/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ks1d/model.hpp"

namespace ks {

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::gap_collapse: return "gap_collapse";
        case StopReason::horizon: return "horizon";
        case StopReason::step_underflow: return "step_underflow";
    }
    return "?";
}

double Trajectory::min_gap(int k) const {
    auto y = frame(k);
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < y.size(); ++i) g = std::min(g, y[i + 1] - y[i]);
    return g;
}

ParticleState Trajectory::state(int k) const {
    auto y = frame(k);
    return ParticleState(ParticleState::Unchecked{}, std::vector<double>(y.begin(), y.end()),
                         chi);
}

void Trajectory::push_frame(DDouble t, std::span<const double> y) {
    times_.push_back(t);
    data_.insert(data_.end(), y.begin(), y.end());
}

namespace {

// Dormand-Prince 5(4) tableau, FSAL.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

bool strictly_increasing(const std::vector<double>& y) {
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        if (!(y[i + 1] > y[i])) return false;
    }
    return true;
}

double min_gap_of(const std::vector<double>& y) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < y.size(); ++i) g = std::min(g, y[i + 1] - y[i]);
    return g;
}

struct Stepper {
    const FlowSpec& flow;
    std::size_t n;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;

    explicit Stepper(const FlowSpec& f, std::size_t n_)
        : flow(f), n(n_), k1(n_), k2(n_), k3(n_), k4(n_), k5(n_), k6(n_), k7(n_),
          ytmp(n_), ynew(n_) {}

    // throws OrderingError/SingularityError on inadmissible states
    void rhs(const std::vector<double>& y, std::vector<double>& out) {
        flow_rhs_raw(y, flow.chi, out);
        if (flow.alpha != 0.0) {
            for (std::size_t i = 0; i < n; ++i) out[i] += flow.alpha * y[i];
        }
    }

    // One trial step from y with fresh k1 already evaluated. Returns the
    // scaled error estimate, or a negative value if a stage state was
    // inadmissible (step must be rejected). The error scale of a component is
    // its smallest adjacent gap: position errors must shrink with the local
    // structure during a collapse, or the rescaled frames degrade, while
    // absolute coordinates are physically meaningless (translation
    // invariance).
    double attempt(const std::vector<double>& y, double dt, double rtol, double atol) {
        try {
            for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + dt * a21 * k1[i];
            rhs(ytmp, k2);
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (a31 * k1[i] + a32 * k2[i]);
            rhs(ytmp, k3);
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(ytmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(ytmp, k5);
            for (std::size_t i = 0; i < n; ++i)
                ytmp[i] = y[i] + dt * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                       a64 * k4[i] + a65 * k5[i]);
            rhs(ytmp, k6);
            for (std::size_t i = 0; i < n; ++i)
                ynew[i] = y[i] + dt * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                       b6 * k6[i]);
            rhs(ynew, k7);
        } catch (const OrderingError&) {
            return -1.0;
        } catch (const SingularityError&) {
            return -1.0;
        }

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double est = dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                     e6 * k6[i] + e7 * k7[i]);
            double local = std::numeric_limits<double>::infinity();
            if (i > 0) local = std::min(local, y[i] - y[i - 1]);
            if (i + 1 < n) local = std::min(local, y[i + 1] - y[i]);
            const double scale = atol + rtol * local;
            err = std::max(err, std::abs(est) / scale);
        }
        return err;
    }

    // Ordering-preserving cap: a fraction of the shortest gap-crossing time,
    // so no gap can change by more than ~safety per step. Gaps whose relative
    // velocity vanishes impose no bound; the error controller takes over.
    double step_cap(const std::vector<double>& y, double safety) const {
        double cap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double g = y[i + 1] - y[i];
            const double dv = std::abs(k1[i + 1] - k1[i]);
            if (dv > 0) cap = std::min(cap, g / dv);
        }
        return safety * cap;
    }
};

}  // namespace

Trajectory integrate_flow(const std::vector<double>& x0, const FlowSpec& flow,
                          const IntegratorConfig& cfg) {
    if (x0.size() < 2) throw ConfigError("integrate: need at least 2 particles");
    if (!(cfg.safety > 0 && cfg.safety < 1)) throw ConfigError("integrate: safety in (0,1)");
    if (!(cfg.dt_init > 0) || !(cfg.tol > 0) || !(cfg.t_max > 0) || cfg.monitor_stride < 1)
        throw ConfigError("integrate: bad config");
    validate_ordered(x0);

    const std::size_t n = x0.size();
    Trajectory traj;
    traj.n = static_cast<int>(n);
    traj.chi = flow.chi;
    traj.alpha = flow.alpha;

    const double g0 = min_gap_of(x0);
    const double gap_stop =
        cfg.gap_stop > 0 ? cfg.gap_stop
                         : (cfg.gap_stop_rel > 0 ? cfg.gap_stop_rel : 1e-6) * g0;
    traj.gap_stop_used = gap_stop;

    std::vector<double> y = x0;
    DDouble t{};
    Stepper st(flow, n);
    st.rhs(y, st.k1);
    traj.push_frame(t, y);

    double dt = cfg.dt_init;
    long since_monitor = 0;
    bool frame_is_current = true;
    bool just_rejected = false;

    auto record = [&]() {
        traj.push_frame(t, y);
        frame_is_current = true;
        since_monitor = 0;
    };

    if (min_gap_of(y) < gap_stop) {
        traj.stop_reason = StopReason::gap_collapse;
        return traj;
    }

    while (true) {
        if (traj.steps_accepted + traj.steps_rejected >= cfg.max_steps)
            throw NumericalError("integrate: step budget exhausted");

        dt = std::min(dt, st.step_cap(y, cfg.safety));
        bool horizon_step = false;
        const double remaining = cfg.t_max - t.value();
        if (dt >= remaining) {
            dt = remaining;
            horizon_step = true;
        }
        if (!(dt > 1e-300) || !std::isfinite(dt)) {
            if (!frame_is_current) record();
            traj.stop_reason = StopReason::step_underflow;
            return traj;
        }

        const double err = st.attempt(y, dt, cfg.tol, cfg.atol);
        if (err < 0.0) {  // stage state crossed: shrink and retry
            ++traj.steps_rejected;
            just_rejected = true;
            dt *= 0.5;
            continue;
        }
        if (err > 1.0) {
            ++traj.steps_rejected;
            just_rejected = true;
            dt *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            continue;
        }

        // a crossing that slipped past the error test is treated as any other
        // inadmissible trial: rejected, never entered into the trajectory
        if (!strictly_increasing(st.ynew)) {
            ++traj.steps_rejected;
            just_rejected = true;
            dt *= 0.25;
            continue;
        }

        t = dd_add(t, dt);
        std::swap(y, st.ynew);
        ++traj.steps_accepted;
        ++since_monitor;
        frame_is_current = false;

        if (flow.post_step) {
            flow.post_step(y);
            if (!strictly_increasing(y))
                throw NumericalError("integrate: post-step hook broke ordering");
            st.rhs(y, st.k7);
        }
        st.k1.swap(st.k7);  // FSAL

        if (min_gap_of(y) < gap_stop) {
            record();
            traj.stop_reason = StopReason::gap_collapse;
            return traj;
        }
        if (horizon_step || t.value() >= cfg.t_max) {
            record();
            traj.stop_reason = StopReason::horizon;
            return traj;
        }
        if (since_monitor >= cfg.monitor_stride) record();

        // modest growth keeps stability-limited stepping near the boundary
        // instead of oscillating against it; no growth right after a rejection
        const double grow = just_rejected ? 1.0 : 1.5;
        just_rejected = false;
        dt *= std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, grow);
    }
}

Trajectory integrate(const ParticleState& s0, const IntegratorConfig& cfg) {
    FlowSpec flow;
    flow.chi = s0.chi();
    flow.alpha = 0.0;
    return integrate_flow(s0.positions(), flow, cfg);
}

namespace {

double pi2_of(std::span<const double> y) {
    double s = 0;
    for (double v : y) s += v * v;
    return s;
}

struct LinFit {
    double c0 = 0, c1 = 0, rms = 0;
};

LinFit linear_fit(const std::vector<double>& s, const std::vector<double>& z) {
    const double m = static_cast<double>(s.size());
    double ss = 0, sz = 0, sss = 0, ssz = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        ss += s[k];
        sz += z[k];
        sss += s[k] * s[k];
        ssz += s[k] * z[k];
    }
    const double det = m * sss - ss * ss;
    LinFit f;
    if (det == 0) {
        f.c0 = sz / m;
        f.c1 = 0;
    } else {
        f.c1 = (m * ssz - ss * sz) / det;
        f.c0 = (sz - f.c1 * ss) / m;
    }
    double acc = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double r = z[k] - (f.c0 + f.c1 * s[k]);
        acc += r * r;
    }
    f.rms = std::sqrt(acc / m);
    return f;
}

}  // namespace

double second_moment_law_check(const Trajectory& traj, double min_gap_floor) {
    if (traj.frames() < 2) throw ConfigError("second_moment_law_check: need >= 2 frames");
    const double n = traj.n;
    const double h = 1.0 / (n + 1.0);
    const double slope = 2.0 * (n - 1.0) * (1.0 - traj.chi * h * n);
    const double pi2_0 = pi2_of(traj.frame(0));
    const double t0 = traj.time(0);

    double scale = 0.0;
    for (int k = 0; k < traj.frames(); ++k) {
        if (traj.min_gap(k) < min_gap_floor) continue;
        scale = std::max(scale, std::abs(pi2_0 + slope * (traj.time(k) - t0)));
    }
    if (scale == 0.0) scale = 1.0;

    double worst = 0.0;
    for (int k = 0; k < traj.frames(); ++k) {
        if (traj.min_gap(k) < min_gap_floor) continue;
        const double law = pi2_0 + slope * (traj.time(k) - t0);
        worst = std::max(worst, std::abs(pi2_of(traj.frame(k)) - law) / scale);
    }
    return worst;
}

BlowUpTimeEstimate estimate_blowup_time(const Trajectory& traj,
                                        std::optional<IndexWindow> inner,
                                        double window_frac) {
    if (traj.stop_reason != StopReason::gap_collapse)
        throw ConfigError("estimate_blowup_time: trajectory did not stop on gap collapse");
    const int K = traj.frames();
    const int W = std::max(5, static_cast<int>(std::ceil(window_frac * K)));
    if (K < 5) throw ConfigError("estimate_blowup_time: insufficient frames");
    int first = std::max(0, K - W);

    // keep the fit inside the asymptotically linear range: squared gaps
    // within two decades of the final value (curvature from farther out can
    // push the intercept negative)
    const double z_end = traj.min_gap(K - 1) * traj.min_gap(K - 1);
    while (first < K - 5) {
        const double g = traj.min_gap(first);
        if (g * g <= 100.0 * z_end) break;
        ++first;
    }

    std::vector<double> s, z;
    s.reserve(static_cast<std::size_t>(K - first));
    z.reserve(s.capacity());
    for (int k = first; k < K; ++k) {
        s.push_back(traj.time_from_end(k));
        const double g = traj.min_gap(k);
        z.push_back(g * g);
    }
    const LinFit f = linear_fit(s, z);
    double span = *std::max_element(z.begin(), z.end()) - *std::min_element(z.begin(), z.end());
    if (span <= 0) span = std::abs(f.c0) + 1e-300;

    BlowUpTimeEstimate est;
    est.method = FitMethod::min_gap_quadratic_fit;
    // gaps grow with s = t_end - t, so c1 > 0 and the root sits past t_end
    est.t_hat_minus_end = (f.c1 > 0) ? std::max(0.0, f.c0 / f.c1) : 0.0;
    est.t_hat = traj.time(K - 1) + est.t_hat_minus_end;
    est.residual = f.rms / span;

    if (inner) {
        if (!inner->valid_for(traj.n)) throw ConfigError("estimate_blowup_time: bad window");
        std::vector<double> zv;
        zv.reserve(s.size());
        for (int k = first; k < K; ++k) {
            auto y = traj.frame(k);
            double mean = 0;
            for (int i = inner->lo0(); i <= inner->hi0(); ++i) mean += y[static_cast<std::size_t>(i)];
            mean /= inner->size();
            double v = 0;
            for (int i = inner->lo0(); i <= inner->hi0(); ++i) {
                const double d = y[static_cast<std::size_t>(i)] - mean;
                v += d * d;
            }
            zv.push_back(v);
        }
        const LinFit fv = linear_fit(s, zv);
        if (fv.c1 > 0)
            est.t_hat_cross = traj.time(K - 1) + std::max(0.0, fv.c0 / fv.c1);
    }
    return est;
}

}  // namespace ks
