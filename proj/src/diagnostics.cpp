#include "ks1d/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "ks1d/kernels.hpp"
#include "ks1d/model.hpp"

namespace ks {

WindowStats window_stats(std::span<const double> x, IndexWindow w,
                         std::optional<double> about) {
    if (!w.valid_for(static_cast<int>(x.size())))
        throw ConfigError("window_stats: invalid window");
    WindowStats out;
    out.window = w;
    double mean = 0;
    for (int i = w.lo0(); i <= w.hi0(); ++i) mean += x[static_cast<std::size_t>(i)];
    mean /= w.size();
    out.mean = mean;
    double var = 0;
    for (int i = w.lo0(); i <= w.hi0(); ++i) {
        const double d = x[static_cast<std::size_t>(i)] - mean;
        var += d * d;
    }
    out.variance = var;
    if (about) {
        double v = 0;
        for (int i = w.lo0(); i <= w.hi0(); ++i) {
            const double d = x[static_cast<std::size_t>(i)] - *about;
            v += d * d;
        }
        out.variance_about = v;
    }
    return out;
}

WindowStats window_stats(const ParticleState& s, IndexWindow w, std::optional<double> about) {
    return window_stats(s.positions(), w, about);
}

ExteriorPotential exterior_potential(std::span<const double> x, int n_total, IndexWindow w,
                                     int m) {
    if (m != 2 && m != 4) throw ConfigError("exterior_potential: m must be 2 or 4");
    if (!w.valid_for(n_total)) throw ConfigError("exterior_potential: invalid window");
    if (w.size() >= n_total)
        throw ConfigError("exterior_potential: window covers all particles (empty exterior)");
    ExteriorPotential out;
    out.window = w;
    out.order = m;
    out.value = kern::active().exterior_power_sum(
        x.data(), static_cast<std::size_t>(n_total), static_cast<std::size_t>(w.lo0()),
        static_cast<std::size_t>(w.hi0()), m);
    return out;
}

ExteriorPotential exterior_potential(const ParticleState& s, IndexWindow w, int m) {
    return exterior_potential(s.positions(), s.n(), w, m);
}

StabilityConstants stability_constants(int n, double chi, int k) {
    if (n < 2 || k < 2 || k > n) throw ConfigError("stability_constants: need 2 <= k <= n");
    const double chi_k = (n + 1.0) / k;
    const double chi_km1 = (k == 1) ? std::numeric_limits<double>::infinity()
                                    : (n + 1.0) / (k - 1.0);
    if (!(chi_k < chi && chi < chi_km1))
        throw ConfigError("stability_constants: chi not strictly inside the rung interval");

    StabilityConstants c;
    c.c42 = 1.0;
    c.alpha = (k - 1.0) * (chi / chi_k - 1.0);
    c.gamma_n = c.c42 * (12.0 + 14.0 * chi + 4.0 * std::pow(n, 0.25));
    const double bound1 = c.alpha / (2.0 * c.gamma_n);
    const double bound2 = 0.125 * c.alpha * c.alpha / (2.0 + 2.0 * chi / std::sqrt(n));
    c.c_n = std::min(bound1, bound2);
    c.beta = 4.0 * c.gamma_n * c.c_n * c.c_n;
    return c;
}

std::optional<IndexWindow> stability_membership(const ParticleState& s, int k, double eps) {
    if (!(eps > 0)) throw ConfigError("stability_membership: eps > 0 required");
    const StabilityConstants c = stability_constants(s.n(), s.chi(), k);
    const auto& x = s.positions();
    for (int q = 1; q + k - 1 <= s.n(); ++q) {
        const IndexWindow w{q, q + k - 1};
        if (window_stats(x, w).variance > eps) continue;
        const double h2 = exterior_potential(x, s.n(), w, 2).value;
        if (h2 < c.c_n / eps) return w;
    }
    return std::nullopt;
}

namespace {

// centered first derivative on a non-uniform 3-point stencil
double d1_nonuniform(double fm, double f0, double fp, double hm, double hp) {
    return (hm * hm * fp + (hp * hp - hm * hm) * f0 - hp * hp * fm) /
           (hm * hp * (hm + hp));
}

}  // namespace

Lemma32Residuals lemma32_residuals(const Trajectory& traj, IndexWindow w,
                                   std::optional<double> about, double slack_factor) {
    if (traj.frames() < 3) throw ConfigError("lemma32_residuals: need >= 3 frames");
    if (!w.valid_for(traj.n)) throw ConfigError("lemma32_residuals: invalid window");

    const int K = traj.frames();
    const double n = traj.n;
    const double chi = traj.chi;
    const int p = w.size() - 1;
    const double chi_p1 = (n + 1.0) / (p + 1.0);  // critical parameter of |I| particles
    const double drift = p * (1.0 - chi / chi_p1);
    const double env_coef = 2.0 + 2.0 * chi / std::sqrt(n);
    const bool has_exterior = w.size() < traj.n;
    const double gamma_n = 1.0 * (12.0 + 14.0 * chi + 4.0 * std::pow(n, 0.25));

    const double x_bar = about ? *about
                               : window_stats(traj.frame(K - 1), w).mean;

    std::vector<double> pi2(K), pib2(K), h2(K);
    for (int k = 0; k < K; ++k) {
        const auto st = window_stats(traj.frame(k), w, x_bar);
        pi2[k] = st.variance;
        pib2[k] = *st.variance_about;
        h2[k] = has_exterior ? exterior_potential(traj.frame(k), traj.n, w, 2).value : 0.0;
    }

    Lemma32Residuals out;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int k = 1; k + 1 < K; ++k) {
        // time differences taken against the last frame so deep-collapse
        // spacing is exact
        const double hm = traj.time_from_end(k - 1) - traj.time_from_end(k);
        const double hp = traj.time_from_end(k) - traj.time_from_end(k + 1);
        if (!(hm > 0) || !(hp > 0)) continue;
        // rounding floor of a finite difference: the differentiated values
        // carry relative noise, amplified by the inverse spacing; near the
        // stopping time the spacing vanishes and this floor takes over
        const double fd_noise = 64.0 * eps * (1.0 / hm + 1.0 / hp);

        const double dpi2 = d1_nonuniform(pi2[k - 1], pi2[k], pi2[k + 1], hm, hp);
        const double dpib2 = d1_nonuniform(pib2[k - 1], pib2[k], pib2[k + 1], hm, hp);
        const double env = env_coef * std::sqrt(pi2[k] * h2[k]);
        const double envb = env_coef * std::sqrt(pib2[k] * h2[k]);

        const double ra = std::abs(0.5 * dpi2 - drift) - env;
        const double rb = std::abs(0.5 * dpib2 - drift) - envb;

        const double scale_v =
            std::max({1.0, std::abs(drift), std::abs(0.5 * dpi2), env});
        const double slack_v = slack_factor * scale_v + fd_noise * std::max(pi2[k], pib2[k]);
        double slack = slack_v;

        out.times.push_back(traj.time(k));
        out.r_variance.push_back(ra);
        out.r_variance_about.push_back(rb);
        if (has_exterior) {
            const double dh2 = d1_nonuniform(h2[k - 1], h2[k], h2[k + 1], hm, hp);
            const double rc = dh2 - gamma_n * h2[k] * h2[k];
            const double scale_h = std::max({1.0, gamma_n * h2[k] * h2[k], std::abs(dh2)});
            const double slack_h = slack_factor * scale_h + fd_noise * h2[k];
            out.r_h_growth.push_back(rc);
            slack = std::max(slack, slack_h);
            if (rc > slack_h) out.all_within_slack = false;
        } else {
            out.r_h_growth.push_back(0.0);
        }
        out.slack.push_back(slack);
        if (ra > slack_v || rb > slack_v) out.all_within_slack = false;
    }
    return out;
}

double t1_pair_identity(std::span<const double> x, IndexWindow w) {
    if (!w.valid_for(static_cast<int>(x.size())))
        throw ConfigError("t1_pair_identity: invalid window");
    const double mean = window_stats(x, w).mean;
    double acc = 0;
    for (int i = w.lo0(); i <= w.hi0(); ++i) {
        for (int j = w.lo0(); j <= w.hi0(); ++j) {
            if (i == j) continue;
            acc += (x[static_cast<std::size_t>(i)] - mean) /
                   (x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(i)]);
        }
    }
    return acc;
}

}  // namespace ks
