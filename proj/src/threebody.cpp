#include "ks1d/threebody.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ks1d/model.hpp"

namespace ks {

namespace {
constexpr double kChi3 = 4.0 / 3.0;
constexpr double kChiBar = 16.0 / 9.0;
constexpr double kChi32 = 2.0;
}  // namespace

ThreeBodyParams threebody_params(double chi) {
    if (!(chi > 0)) throw ConfigError("threebody_params: chi > 0 required");
    ThreeBodyParams p;
    p.chi = chi;
    p.alpha3 = 2.0 * (chi / kChi3 - 1.0);
    p.alpha_bar = chi - kChi32;
    if (chi <= kChi3)
        p.regime = ThreeBodyRegime::subcritical;
    else if (chi <= kChiBar)
        p.regime = ThreeBodyRegime::triple_symmetric;
    else if (chi < kChi32)
        p.regime = ThreeBodyRegime::triple_asymmetric;
    else if (chi == kChi32)
        p.regime = ThreeBodyRegime::rung;
    else
        p.regime = ThreeBodyRegime::pair;
    return p;
}

std::pair<double, double> u_rhs(double u1, double u2, double chi) {
    if (!(u1 > 0) || !(u2 > 0)) throw SingularityError("u_rhs: nonpositive distance");
    const double a = 2.0 * chi * 0.25;
    const double du1 = 2.0 / u1 - 1.0 / u2 - a * (2.0 / u1 - 1.0 / u2 + 1.0 / (u1 + u2));
    const double du2 = 2.0 / u2 - 1.0 / u1 - a * (2.0 / u2 - 1.0 / u1 + 1.0 / (u1 + u2));
    return {du1, du2};
}

std::pair<double, double> v_rhs(double v1, double v2, double chi) {
    const double alpha = 2.0 * (chi / kChi3 - 1.0);
    auto [d1, d2] = u_rhs(v1, v2, chi);
    return {d1 + alpha * v1, d2 + alpha * v2};
}

double curve_residual(double v1, double v2) {
    return v1 * v1 + v2 * v2 + v1 * v2 - 1.5;
}

std::pair<double, double> curve_point_above(double v1) {
    const double disc = 6.0 - 3.0 * v1 * v1;
    if (!(v1 > 0) || disc < 0) throw ConfigError("curve_point_above: v1 out of range");
    return {v1, 0.5 * (-v1 + std::sqrt(disc))};
}

std::pair<double, double> project_to_curve(double v1, double v2) {
    const double q = v1 * v1 + v2 * v2 + v1 * v2;
    const double s = std::sqrt(1.5 / q);
    return {v1 * s, v2 * s};
}

FixedPointSet fixed_points(double chi) {
    if (!(chi > kChi3 && chi < kChi32))
        throw ConfigError("fixed_points: chi must lie in (4/3, 2)");
    FixedPointSet fp;
    const double r = std::sqrt(2.0) / 2.0;
    fp.symmetric = {r, r};
    const double alpha = 2.0 * (chi / kChi3 - 1.0);
    fp.product = 3.0 * (1.0 - 0.5 * chi) / alpha;  // 1 - 2 chi h3 = 1 - chi/2
    fp.merged = std::abs(chi - kChiBar) <= 1e-4;
    if (chi > kChiBar) {
        const double s2 = 1.5 + fp.product;
        double disc = s2 - 4.0 * fp.product;  // = 3/2 - 3 product
        if (disc < 0) disc = 0;
        const double s = std::sqrt(s2), d = std::sqrt(disc);
        fp.asymmetric = {{0.5 * (s - d), 0.5 * (s + d)}};
    }
    return fp;
}

double restricted_eigenvalue(double chi, std::pair<double, double> point, double h) {
    const auto [v1, v2] = point;
    // tangent to the level set of q(v) at the point
    const double gx = 2.0 * v1 + v2, gy = 2.0 * v2 + v1;
    const double norm = std::hypot(gx, gy);
    const double tx = -gy / norm, ty = gx / norm;
    auto phi = [&](double s) {
        auto [a, b] = project_to_curve(v1 + s * tx, v2 + s * ty);
        auto [d1, d2] = v_rhs(a, b, chi);
        return d1 * tx + d2 * ty;
    };
    return (phi(h) - phi(-h)) / (2.0 * h);
}

std::vector<double> u_embed(double u1, double u2) { return {0.0, u1, u1 + u2}; }

std::vector<double> v_embed(double v1, double v2) {
    return {-(2.0 * v1 + v2) / 3.0, (v1 - v2) / 3.0, (v1 + 2.0 * v2) / 3.0};
}

std::pair<double, double> gaps_of(std::span<const double> x) {
    return {x[1] - x[0], x[2] - x[1]};
}

Trajectory integrate_u(double chi, std::pair<double, double> u0,
                       const IntegratorConfig& cfg) {
    FlowSpec flow;
    flow.chi = chi;
    flow.alpha = 0.0;
    return integrate_flow(u_embed(u0.first, u0.second), flow, cfg);
}

Trajectory integrate_v(double chi, std::pair<double, double> v0,
                       const IntegratorConfig& cfg, bool project,
                       std::optional<double> alpha_override) {
    FlowSpec flow;
    flow.chi = chi;
    flow.alpha = alpha_override ? *alpha_override : 2.0 * (chi / kChi3 - 1.0);
    if (project) {
        flow.post_step = [](std::vector<double>& y) {
            // kill the center-of-mass gauge mode (it grows like e^{alpha tau}
            // from roundoff), then renormalize to the unit sphere: together
            // exactly the constraint-curve projection
            const double c = (y[0] + y[1] + y[2]) / 3.0;
            for (auto& v : y) v -= c;
            const double r = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
            for (auto& v : y) v /= r;
        };
    }
    return integrate_flow(v_embed(v0.first, v0.second), flow, cfg);
}

namespace {

struct VSeries {
    std::vector<double> tau, v1, v2;
};

VSeries v_series_of(const Trajectory& traj) {
    VSeries s;
    for (int k = 0; k < traj.frames(); ++k) {
        auto [a, b] = gaps_of(traj.frame(k));
        s.tau.push_back(traj.time(k));
        s.v1.push_back(a);
        s.v2.push_back(b);
    }
    return s;
}

// linear interpolation of a series at time t (values assumed continuous)
double interp_at(const std::vector<double>& t, const std::vector<double>& v, double at) {
    auto it = std::lower_bound(t.begin(), t.end(), at);
    if (it == t.begin()) return v.front();
    if (it == t.end()) return v.back();
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    const double w = (at - t[hi - 1]) / (t[hi] - t[hi - 1]);
    return v[hi - 1] + w * (v[hi] - v[hi - 1]);
}

// crossing time of a strictly monotone series through level c, if attained
std::optional<double> crossing_time(const std::vector<double>& t,
                                    const std::vector<double>& v, double c) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        const bool between = (v[k - 1] <= c && c <= v[k]) || (v[k] <= c && c <= v[k - 1]);
        if (between && v[k] != v[k - 1]) {
            const double w = (c - v[k - 1]) / (v[k] - v[k - 1]);
            return t[k - 1] + w * (t[k] - t[k - 1]);
        }
    }
    return std::nullopt;
}

double sup_diff_at_shift(const VSeries& a, const VSeries& b, double shift) {
    double worst = 0;
    int used = 0;
    for (std::size_t k = 0; k < a.tau.size(); ++k) {
        const double tq = a.tau[k] + shift;
        if (tq < b.tau.front() || tq > b.tau.back()) continue;
        worst = std::max(worst, std::abs(a.v1[k] - interp_at(b.tau, b.v1, tq)));
        worst = std::max(worst, std::abs(a.v2[k] - interp_at(b.tau, b.v2, tq)));
        ++used;
    }
    if (used < 8) return std::numeric_limits<double>::infinity();
    return worst;
}

// translate property between two series of the same heteroclinic branch:
// align at a common crossing of the alignment channel, then refine the shift
// by minimizing the sup-difference directly (the crossing alone is limited by
// the frame interpolation error)
double translate_diff(const VSeries& a, const VSeries& b,
                      const std::vector<double>& a_align, const std::vector<double>& b_align,
                      double preferred_fiducial) {
    const auto [alo, ahi] = std::minmax_element(a_align.begin(), a_align.end());
    const auto [blo, bhi] = std::minmax_element(b_align.begin(), b_align.end());
    const double lo = std::max(*alo, *blo), hi = std::min(*ahi, *bhi);
    if (!(lo < hi)) return std::numeric_limits<double>::infinity();
    double c = preferred_fiducial;
    if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);
    const auto ta = crossing_time(a.tau, a_align, c);
    const auto tb = crossing_time(b.tau, b_align, c);
    if (!ta || !tb) return std::numeric_limits<double>::infinity();
    const double s0 = *tb - *ta;

    double swin_lo = s0 - 0.1, swin_hi = s0 + 0.1;
    for (int it = 0; it < 80; ++it) {
        const double m1 = swin_lo + (swin_hi - swin_lo) / 3.0;
        const double m2 = swin_hi - (swin_hi - swin_lo) / 3.0;
        if (sup_diff_at_shift(a, b, m1) < sup_diff_at_shift(a, b, m2)) swin_hi = m2;
        else swin_lo = m1;
    }
    return sup_diff_at_shift(a, b, 0.5 * (swin_lo + swin_hi));
}

}  // namespace

LiouvilleResult liouville_check(double chi, const std::vector<std::pair<double, double>>& grid,
                                const LiouvilleOptions& opts) {
    const auto params = threebody_params(chi);
    if (params.regime != ThreeBodyRegime::triple_symmetric &&
        params.regime != ThreeBodyRegime::triple_asymmetric)
        throw ConfigError("liouville_check: chi must lie in (4/3, 2)");
    for (const auto& [v1, v2] : grid) {
        if (std::abs(curve_residual(v1, v2)) > 1e-9)
            throw ConfigError("liouville_check: grid point off the constraint curve");
        if (v1 == v2) throw ConfigError("liouville_check: grid point on the diagonal");
    }

    const auto fp = fixed_points(chi);
    const auto target = fp.asymmetric ? *fp.asymmetric : fp.symmetric;
    // branch boundary along the curve: the attractor itself for the symmetric
    // regime (single branch for v2 > v1), the asymmetric point otherwise
    const double split_v1 = target.first;

    LiouvilleResult res;
    res.on_curve_ok = res.convergence_ok = res.translates_ok = true;

    IntegratorConfig cfg;
    cfg.tol = opts.tol;
    cfg.t_max = opts.tau_end;
    cfg.dt_init = 1e-6;
    cfg.monitor_stride = 1;
    cfg.gap_stop = 1e-12;  // rescaled gaps stay order one on the curve

    std::vector<VSeries> runs;
    for (const auto& g : grid) {
        const auto traj = integrate_v(chi, g, cfg, /*project=*/false);
        auto vs = v_series_of(traj);
        for (std::size_t k = 0; k < vs.tau.size(); ++k) {
            res.max_drift =
                std::max(res.max_drift, std::abs(curve_residual(vs.v1[k], vs.v2[k])));
        }
        const double dist = std::hypot(vs.v1.back() - target.first, vs.v2.back() - target.second);
        res.worst_endpoint_dist = std::max(res.worst_endpoint_dist, dist);
        res.branch.push_back(g.first < split_v1 ? 0 : 1);
        runs.push_back(std::move(vs));
    }
    res.on_curve_ok = res.max_drift <= opts.drift_tol;
    res.convergence_ok = res.worst_endpoint_dist <= opts.conv_tol;

    for (std::size_t a = 0; a < runs.size(); ++a) {
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            if (res.branch[a] != res.branch[b]) continue;
            const double d = translate_diff(runs[a], runs[b], runs[a].v1, runs[b].v1,
                                            opts.fiducial);
            res.worst_translate_diff = std::max(res.worst_translate_diff, d);
        }
    }
    res.translates_ok = res.worst_translate_diff <= opts.align_tol;
    return res;
}

PairCollapseAnalysis pair_collapse_analysis(double chi, std::pair<double, double> u0,
                                            std::pair<double, double> u0_alt) {
    if (!(chi > kChi32)) throw ConfigError("pair_collapse_analysis: chi > 2 required");
    if (!(u0.second > u0.first) || !(u0_alt.second > u0_alt.first))
        throw ConfigError("pair_collapse_analysis: need u2(0) > u1(0)");

    PairCollapseAnalysis out;
    const double ab = chi - kChi32;
    out.alpha_bar = ab;
    out.linearization = {{{2.0 * ab, -1.0}, {0.0, -ab}}};
    out.eigenvalues = {2.0 * ab, -ab};

    IntegratorConfig cfg;
    cfg.tol = 1e-12;
    cfg.t_max = 1e3;
    cfg.dt_init = 1e-6;
    cfg.monitor_stride = 1;

    struct RescaledPair {
        VSeries v;
        double t_hat = 0;
    };
    auto run = [&](std::pair<double, double> u) {
        const auto traj = integrate_u(chi, u, cfg);
        if (traj.stop_reason != StopReason::gap_collapse)
            throw NumericalError("pair_collapse_analysis: no collapse");
        const auto est = estimate_blowup_time(traj);
        RescaledPair rp;
        rp.t_hat = est.t_hat;
        const double delta_end = est.t_hat_minus_end;
        for (int k = 0; k < traj.frames(); ++k) {
            const double delta = delta_end + traj.time_from_end(k);
            const double r = std::sqrt(2.0 * ab * delta);
            auto [g1, g2] = gaps_of(traj.frame(k));
            rp.v.tau.push_back(std::log((delta_end + traj.time_from_end(0)) / delta) /
                               (2.0 * ab));
            rp.v.v1.push_back(g1 / r);
            rp.v.v2.push_back(g2 / r);
        }
        return rp;
    };

    const auto main_run = run(u0);
    out.t_hat = main_run.t_hat;
    out.v1_final = main_run.v.v1.back();

    {  // fit log v2 against tau over the second half
        const std::size_t K = main_run.v.tau.size();
        const std::size_t half = K / 2;
        double st = 0, sv = 0, stt = 0, stv = 0;
        const double m = static_cast<double>(K - half);
        for (std::size_t k = half; k < K; ++k) {
            const double t = main_run.v.tau[k], lv = std::log(main_run.v.v2[k]);
            st += t;
            sv += lv;
            stt += t * t;
            stv += t * lv;
        }
        out.v2_log_slope = (m * stv - st * sv) / (m * stt - st * st);
    }

    {  // u2 - u1 increases along the run
        const auto traj = integrate_u(chi, u0, cfg);
        bool mono = true;
        double prev = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < traj.frames(); ++k) {
            auto [g1, g2] = gaps_of(traj.frame(k));
            const double diff = g2 - g1;
            if (diff < prev - 1e-12 * std::max(1.0, std::abs(prev))) mono = false;
            prev = diff;
        }
        out.u2_minus_u1_monotone = mono;
    }

    {  // both runs lie on the stable manifold of (1, +inf): time translates.
        // Compared in the (v1, 1/v2) chart, where the manifold is bounded;
        // the deep half of each series is dropped, as there the fitted
        // blow-up time dominates the rescaling error.
        auto a = run(u0);
        auto b = run(u0_alt);
        auto to_chart = [](VSeries& s) {
            const std::size_t keep = s.tau.size() / 2;
            s.tau.resize(keep);
            s.v1.resize(keep);
            s.v2.resize(keep);
            for (auto& v : s.v2) v = 1.0 / v;
        };
        to_chart(a.v);
        to_chart(b.v);
        out.translate_sup_diff = translate_diff(a.v, b.v, a.v.v2, b.v.v2, 0.3);
    }
    return out;
}

}  // namespace ks
