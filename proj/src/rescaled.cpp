#include "ks1d/rescaled.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ks1d/kernels.hpp"
#include "ks1d/model.hpp"

namespace ks {
namespace {

RescaledSeries transform(const Trajectory& traj, IndexWindow window, double t_hat,
                         double offset_from_end, double x_bar, double alpha) {
    if (!(alpha > 0)) throw ConfigError("to_rescaled: alpha > 0 required");
    if (!window.valid_for(traj.n)) throw ConfigError("to_rescaled: invalid window");

    RescaledSeries out;
    out.n = traj.n;
    out.chi = traj.chi;
    out.alpha = alpha;
    out.t_hat = t_hat;
    out.x_bar = x_bar;
    out.window = window;

    const int K = traj.frames();
    out.tau.reserve(static_cast<std::size_t>(K));
    out.data.reserve(static_cast<std::size_t>(K) * static_cast<std::size_t>(traj.n));

    double delta0 = -1;
    for (int k = 0; k < K; ++k) {
        const double delta = offset_from_end + traj.time_from_end(k);  // t_hat - t_k
        if (!(delta > 0)) throw ConfigError("to_rescaled: frame at or beyond t_hat");
        if (k == 0) {
            delta0 = delta;
            out.r0 = std::sqrt(2.0 * alpha * delta0);
        }
        const double r = std::sqrt(2.0 * alpha * delta);
        out.tau.push_back(-std::log(delta / delta0) / (2.0 * alpha));
        const auto y = traj.frame(k);
        for (int i = 0; i < traj.n; ++i)
            out.data.push_back((y[static_cast<std::size_t>(i)] - x_bar) / r);
    }
    return out;
}

}  // namespace

RescaledSeries to_rescaled(const Trajectory& traj, IndexWindow window, double t_hat,
                           double x_bar, double alpha) {
    const double offset = dd_sub(DDouble{t_hat, 0.0}, traj.time_dd(traj.frames() - 1));
    return transform(traj, window, t_hat, offset, x_bar, alpha);
}

RescaledSeries to_rescaled(const Trajectory& traj, IndexWindow window,
                           const BlowUpTimeEstimate& est, double x_bar, double alpha) {
    return transform(traj, window, est.t_hat, est.t_hat_minus_end, x_bar, alpha);
}

std::vector<double> rescaled_flow_rhs(std::span<const double> y, double chi, double alpha) {
    std::vector<double> out(y.size());
    flow_rhs_raw(y, chi, out);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] += alpha * y[i];
    return out;
}

double rescaled_energy(std::span<const double> y, double chi, double alpha) {
    double q = 0;
    for (double v : y) q += v * v;
    return energy_raw(y, chi) - 0.5 * alpha * q;
}

double local_rescaled_energy(std::span<const double> y, IndexWindow w, double chi,
                             double alpha) {
    if (!w.valid_for(static_cast<int>(y.size())))
        throw ConfigError("local_rescaled_energy: invalid window");
    const double h = 1.0 / (static_cast<double>(y.size()) + 1.0);
    double e = 0;
    for (int i = w.lo0(); i < w.hi0(); ++i) {
        const double g = y[static_cast<std::size_t>(i) + 1] - y[static_cast<std::size_t>(i)];
        if (!(g > 0)) throw OrderingError("local_rescaled_energy: ordering violated", i + 1, i + 2);
        e -= std::log(g);
    }
    double inter = 0;
    for (int i = w.lo0(); i <= w.hi0(); ++i) {
        for (int j = i + 1; j <= w.hi0(); ++j) {
            inter += std::log(y[static_cast<std::size_t>(j)] - y[static_cast<std::size_t>(i)]);
        }
    }
    e += 2.0 * chi * h * inter;
    for (int i = w.lo0(); i <= w.hi0(); ++i) {
        const double v = y[static_cast<std::size_t>(i)];
        e -= 0.5 * alpha * v * v;
    }
    return e;
}

std::vector<double> local_rescaled_grad(std::span<const double> y, IndexWindow w,
                                        double chi, double alpha) {
    if (!w.valid_for(static_cast<int>(y.size())))
        throw ConfigError("local_rescaled_grad: invalid window");
    const double h = 1.0 / (static_cast<double>(y.size()) + 1.0);
    std::vector<double> g(static_cast<std::size_t>(w.size()), 0.0);
    for (int i = w.lo0(); i <= w.hi0(); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        double v = -alpha * y[ii];
        if (i < w.hi0()) v += 1.0 / (y[ii + 1] - y[ii]);
        if (i > w.lo0()) v -= 1.0 / (y[ii] - y[ii - 1]);
        double s = 0;
        for (int j = w.lo0(); j <= w.hi0(); ++j) {
            if (j == i) continue;
            s += 1.0 / (y[static_cast<std::size_t>(j)] - y[ii]);
        }
        v -= 2.0 * chi * h * s;
        g[static_cast<std::size_t>(i - w.lo0())] = v;
    }
    return g;
}

double local_global_grad_gap(std::span<const double> y, IndexWindow w, double chi,
                             double alpha) {
    const auto local = local_rescaled_grad(y, w, chi, alpha);
    const auto rhs = rescaled_flow_rhs(y, chi, alpha);  // -grad E_resc
    double acc = 0;
    for (int i = w.lo0(); i <= w.hi0(); ++i) {
        const double d = local[static_cast<std::size_t>(i - w.lo0())] +
                         rhs[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

struct LinFit {
    double slope = 0, icept = 0;
};

LinFit fit_line(std::span<const double> t, std::span<const double> v) {
    const double m = static_cast<double>(t.size());
    double st = 0, sv = 0, stt = 0, stv = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        st += t[k];
        sv += v[k];
        stt += t[k] * t[k];
        stv += t[k] * v[k];
    }
    const double det = m * stt - st * st;
    LinFit f;
    if (det != 0) {
        f.slope = (m * stv - st * sv) / det;
        f.icept = (sv - f.slope * st) / m;
    } else {
        f.icept = sv / m;
    }
    return f;
}

double window_min_gap(std::span<const double> y, int lo0, int hi0) {
    double g = std::numeric_limits<double>::infinity();
    for (int i = lo0; i < hi0; ++i)
        g = std::min(g, y[static_cast<std::size_t>(i) + 1] - y[static_cast<std::size_t>(i)]);
    return g;
}

}  // namespace

RigidityReport check_conditions_r1_r6(const RescaledSeries& series, double min_tau_span) {
    const int K = series.frames();
    if (K < 10) throw ConfigError("check_conditions_r1_r6: need >= 10 frames");
    const IndexWindow w = series.window;
    const double alpha = series.alpha;
    const int n = series.n;
    const bool has_exterior = w.size() < n;

    RigidityReport rep;
    rep.tau.assign(series.tau.begin(), series.tau.end());

    std::vector<double> sup_inner(static_cast<std::size_t>(K));
    std::vector<double> min_inner_gap(static_cast<std::size_t>(K));
    std::vector<double> min_all_gap(static_cast<std::size_t>(K));
    rep.h_series.resize(static_cast<std::size_t>(K));
    rep.energy_series.resize(static_cast<std::size_t>(K));
    rep.grad_norm_series.resize(static_cast<std::size_t>(K));
    rep.ydot_sup_series.resize(static_cast<std::size_t>(K));

    for (int k = 0; k < K; ++k) {
        const auto y = series.frame(k);
        double sup = 0;
        for (int i = w.lo0(); i <= w.hi0(); ++i)
            sup = std::max(sup, std::abs(y[static_cast<std::size_t>(i)]));
        sup_inner[static_cast<std::size_t>(k)] = sup;
        min_inner_gap[static_cast<std::size_t>(k)] = window_min_gap(y, w.lo0(), w.hi0());
        min_all_gap[static_cast<std::size_t>(k)] = window_min_gap(y, 0, n - 1);
        rep.h_series[static_cast<std::size_t>(k)] =
            has_exterior ? kern::active().exterior_power_sum(
                               y.data(), static_cast<std::size_t>(n),
                               static_cast<std::size_t>(w.lo0()),
                               static_cast<std::size_t>(w.hi0()), 2)
                         : 0.0;
        rep.energy_series[static_cast<std::size_t>(k)] =
            local_rescaled_energy(y, w, series.chi, alpha);
        const auto grad = local_rescaled_grad(y, w, series.chi, alpha);
        double gn = 0;
        for (double g : grad) gn += g * g;
        rep.grad_norm_series[static_cast<std::size_t>(k)] = std::sqrt(gn);
        const auto rhs = rescaled_flow_rhs(y, series.chi, alpha);
        double ds = 0;
        for (int i = w.lo0(); i <= w.hi0(); ++i)
            ds = std::max(ds, std::abs(rhs[static_cast<std::size_t>(i)]));
        rep.ydot_sup_series[static_cast<std::size_t>(k)] = ds;
    }

    const int half = K / 2;
    auto max_range = [](const std::vector<double>& v, int a, int b) {
        double m = -std::numeric_limits<double>::infinity();
        for (int k = a; k < b; ++k) m = std::max(m, v[static_cast<std::size_t>(k)]);
        return m;
    };
    auto min_range = [](const std::vector<double>& v, int a, int b) {
        double m = std::numeric_limits<double>::infinity();
        for (int k = a; k < b; ++k) m = std::min(m, v[static_cast<std::size_t>(k)]);
        return m;
    };

    // R1: defined for a long rescaled horizon
    const double span = series.tau.back() - series.tau.front();
    rep.r[0] = {span >= min_tau_span, span};

    // R2: inner particles bounded (no growth into the late half)
    rep.r[1] = {max_range(sup_inner, half, K) <= 1.2 * max_range(sup_inner, 0, half) + 1e-12,
                max_range(sup_inner, 0, K)};

    // R3: inner gaps bounded below, stationary late
    {
        const double early = min_range(min_inner_gap, 0, half);
        const double late = min_range(min_inner_gap, half, K);
        rep.r[2] = {late > 0 && late >= 0.5 * early, 1.0 / min_range(min_inner_gap, 0, K)};
    }

    // R4: every outer particle escapes at rate >= 0.9 alpha
    if (!has_exterior) {
        rep.r[3] = {true, 0.0};
    } else {
        double worst = std::numeric_limits<double>::infinity();
        bool ok = true;
        std::vector<double> lt, lv;
        for (int j = 0; j < n; ++j) {
            if (w.contains(j + 1)) continue;
            lt.clear();
            lv.clear();
            for (int k = half; k < K; ++k) {
                const double v = std::abs(series.frame(k)[static_cast<std::size_t>(j)]);
                if (v <= 0) continue;
                lt.push_back(series.tau[static_cast<std::size_t>(k)]);
                lv.push_back(std::log(v));
            }
            if (lt.size() < 4) {
                ok = false;
                continue;
            }
            const double slope = fit_line(lt, lv).slope;
            worst = std::min(worst, slope);
            if (slope < 0.9 * alpha) ok = false;
        }
        rep.r[3] = {ok, worst};
    }

    // R5: H <= A^2 e^{-2 alpha tau} from the first conforming frame, with the
    // 5% headroom making "conforming" concrete; the frame must sit in the
    // first half of the series.
    if (!has_exterior) {
        rep.r[4] = {true, 0.0};
        rep.h_rate = -2.0 * alpha;
    } else {
        std::vector<double> u(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            u[static_cast<std::size_t>(k)] = std::log(rep.h_series[static_cast<std::size_t>(k)]) +
                                             2.0 * alpha * series.tau[static_cast<std::size_t>(k)];
        std::vector<double> suffix_max(static_cast<std::size_t>(K));
        double run = -std::numeric_limits<double>::infinity();
        for (int k = K - 1; k >= 0; --k) {
            run = std::max(run, u[static_cast<std::size_t>(k)]);
            suffix_max[static_cast<std::size_t>(k)] = run;
        }
        int conform = -1;
        const double headroom = std::log(1.05);
        for (int s = 0; s <= half; ++s) {
            if (suffix_max[static_cast<std::size_t>(s)] <= u[static_cast<std::size_t>(s)] + headroom) {
                conform = s;
                break;
            }
        }
        const double witness =
            conform >= 0 ? std::exp(0.5 * (u[static_cast<std::size_t>(conform)] + headroom)) : 0.0;
        rep.r[4] = {conform >= 0, witness};

        std::vector<double> lt(series.tau.begin() + half, series.tau.end());
        std::vector<double> lh;
        lh.reserve(lt.size());
        for (int k = half; k < K; ++k)
            lh.push_back(std::log(rep.h_series[static_cast<std::size_t>(k)]));
        rep.h_rate = fit_line(lt, lh).slope;
    }

    // R6: all pairwise distances bounded below (adjacent gaps suffice for
    // ordered configurations)
    {
        const double early = min_range(min_all_gap, 0, half);
        const double late = min_range(min_all_gap, half, K);
        rep.r[5] = {late > 0 && late >= 0.5 * early, 1.0 / min_range(min_all_gap, 0, K)};
    }

    const int tail10 = std::max(1, K / 10);
    double acc = 0;
    for (int k = K - tail10; k < K; ++k) acc += rep.energy_series[static_cast<std::size_t>(k)];
    rep.e_inf_hat = acc / tail10;
    const int tail20 = std::max(2, K / 5);
    rep.tail_oscillation = max_range(rep.energy_series, K - tail20, K) -
                           min_range(rep.energy_series, K - tail20, K);
    rep.final_grad_norm = rep.grad_norm_series.back();
    return rep;
}

Corollary36Report corollary36_monitor(const RescaledSeries& series, IndexWindow qp, int k,
                                      double slack_factor) {
    const int K = series.frames();
    if (!qp.valid_for(series.n)) throw ConfigError("corollary36_monitor: invalid window");
    const double n = series.n;
    const double chi = series.chi;
    const double alpha = series.alpha;
    const int size = qp.size();
    const double alpha_qp = (size - 1) * (1.0 - chi * size / (n + 1.0));
    if ((alpha_qp > 0) != (size <= k - 1) && alpha_qp != 0)
        throw ConfigError("corollary36_monitor: window size inconsistent with rung");
    const double env_coef = 2.0 + 2.0 * chi / std::sqrt(n);
    const bool proper = size < series.n;

    std::vector<double> p2(static_cast<std::size_t>(K)), hh(static_cast<std::size_t>(K));
    for (int f = 0; f < K; ++f) {
        const auto y = series.frame(f);
        double mean = 0;
        for (int i = qp.lo0(); i <= qp.hi0(); ++i) mean += y[static_cast<std::size_t>(i)];
        mean /= size;
        double v = 0;
        for (int i = qp.lo0(); i <= qp.hi0(); ++i) {
            const double d = y[static_cast<std::size_t>(i)] - mean;
            v += d * d;
        }
        p2[static_cast<std::size_t>(f)] = v;
        hh[static_cast<std::size_t>(f)] =
            proper ? kern::active().exterior_power_sum(
                         y.data(), static_cast<std::size_t>(series.n),
                         static_cast<std::size_t>(qp.lo0()), static_cast<std::size_t>(qp.hi0()), 2)
                   : 0.0;
    }

    Corollary36Report rep;
    for (int f = 1; f + 1 < K; ++f) {
        const double hm = series.tau[static_cast<std::size_t>(f)] - series.tau[static_cast<std::size_t>(f) - 1];
        const double hp = series.tau[static_cast<std::size_t>(f) + 1] - series.tau[static_cast<std::size_t>(f)];
        if (!(hm > 0) || !(hp > 0) || alpha_qp == 0) {
            rep.verdicts.push_back(CorollaryVerdict::not_fired);
            continue;
        }
        const double fire_bound = std::abs(alpha_qp) / (2.0 * env_coef);
        if (std::sqrt(p2[static_cast<std::size_t>(f)] * hh[static_cast<std::size_t>(f)]) > fire_bound) {
            rep.verdicts.push_back(CorollaryVerdict::not_fired);
            continue;
        }
        const double dp2 =
            (hm * hm * p2[static_cast<std::size_t>(f) + 1] +
             (hp * hp - hm * hm) * p2[static_cast<std::size_t>(f)] -
             hp * hp * p2[static_cast<std::size_t>(f) - 1]) /
            (hm * hp * (hm + hp));
        const double lower = alpha_qp + 2.0 * alpha * p2[static_cast<std::size_t>(f)];
        const double upper = -alpha_qp + 2.0 * alpha * p2[static_cast<std::size_t>(f)];
        const double slack =
            slack_factor * std::max({1.0, std::abs(lower), std::abs(upper), std::abs(dp2)});
        const bool pass = (alpha_qp > 0) ? (dp2 >= lower - slack) : (dp2 <= upper + slack);
        ++rep.fired;
        if (!pass) ++rep.failed;
        rep.verdicts.push_back(pass ? CorollaryVerdict::pass : CorollaryVerdict::fail);
    }
    return rep;
}

}  // namespace ks
