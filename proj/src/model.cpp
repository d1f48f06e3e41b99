#include "ks1d/model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "ks1d/kernels.hpp"
#include "ks1d/rng.hpp"

namespace ks {

void validate_ordered(const std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw NumericalError("non-finite position");
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (x[i + 1] <= x[i]) {
            if (x[i + 1] == x[i])
                throw SingularityError("zero gap between particles",
                                       static_cast<int>(i) + 1, static_cast<int>(i) + 2);
            throw OrderingError("positions not strictly increasing",
                                static_cast<int>(i) + 1, static_cast<int>(i) + 2);
        }
    }
}

ParticleState::ParticleState(std::vector<double> positions, double chi)
    : x_(std::move(positions)), chi_(chi) {
    if (x_.size() < 2) throw ConfigError("need at least 2 particles");
    if (!(chi_ > 0)) throw ConfigError("chi must be positive");
    validate_ordered(x_);
}

double ParticleState::min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) g = std::min(g, x_[i + 1] - x_[i]);
    return g;
}

namespace {

// Gap scan shared by energy/rhs: throws with the offending pair.
void check_gaps(std::span<const double> x) {
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double g = x[i + 1] - x[i];
        if (!(g > 0)) {
            if (g == 0)
                throw SingularityError("zero gap", static_cast<int>(i) + 1,
                                       static_cast<int>(i) + 2);
            throw OrderingError("positions not strictly increasing",
                                static_cast<int>(i) + 1, static_cast<int>(i) + 2);
        }
        if (!std::isfinite(1.0 / g))
            throw SingularityError("gap underflow", static_cast<int>(i) + 1,
                                    static_cast<int>(i) + 2);
    }
}

}  // namespace

double energy_raw(std::span<const double> x, double chi) {
    check_gaps(x);
    const std::size_t n = x.size();
    const double h = 1.0 / (static_cast<double>(n) + 1.0);
    const auto& k = kern::active();

    std::vector<double> gaps(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) gaps[i] = x[i + 1] - x[i];

    const double entropy = -k.sum_log(gaps.data(), gaps.size());
    const double interaction = 2.0 * chi * h * k.pairwise_log_sum(x.data(), n);
    return entropy + interaction;
}

double energy(const ParticleState& s) { return energy_raw(s.positions(), s.chi()); }

void flow_rhs_raw(std::span<const double> x, double chi, std::span<double> out) {
    check_gaps(x);
    const std::size_t n = x.size();
    const double h = 1.0 / (static_cast<double>(n) + 1.0);
    const auto& k = kern::active();

    k.reciprocal_sums(x.data(), n, out.data());
    const double a = 2.0 * chi * h;
    for (std::size_t i = 0; i < n; ++i) {
        double v = a * out[i];
        if (i + 1 < n) v -= 1.0 / (x[i + 1] - x[i]);
        if (i > 0) v += 1.0 / (x[i] - x[i - 1]);
        out[i] = v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(out[i]))
            throw SingularityError("non-finite velocity", static_cast<int>(i) + 1, -1);
    }
}

std::vector<double> flow_rhs(const ParticleState& s) {
    std::vector<double> out(static_cast<std::size_t>(s.n()));
    flow_rhs_raw(s.positions(), s.chi(), out);
    return out;
}

CriticalLadder critical_ladder(int n, double chi) {
    if (n < 2) throw ConfigError("critical_ladder: n >= 2 required");
    if (!(chi > 0)) throw ConfigError("critical_ladder: chi > 0 required");

    CriticalLadder lad;
    lad.n = n;
    lad.chi = chi;
    lad.chi_n = (n + 1.0) / n;
    lad.chi_k.resize(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) lad.chi_k[static_cast<std::size_t>(k) - 1] = (n + 1.0) / k;

    for (int k = 1; k <= n; ++k) {
        if (std::abs(chi - lad.rung(k)) <= kRungEqualityTol) {
            lad.position = CriticalLadder::Position::rung;
            lad.k_star = k;
            return lad;
        }
    }
    if (chi < lad.chi_n) {
        lad.position = CriticalLadder::Position::subcritical;
        lad.k_star = 0;
        return lad;
    }
    // chi_N^k is decreasing in k; the critical count is the smallest k with
    // chi_N^k < chi, so that chi_N^k < chi < chi_N^{k-1} (chi_N^0 = +inf).
    lad.position = CriticalLadder::Position::interior;
    lad.k_star = n;
    for (int k = 1; k <= n; ++k) {
        if (lad.rung(k) < chi) {
            lad.k_star = k;
            break;
        }
    }
    return lad;
}

double log_hls_functional(std::span<const double> positions) {
    const std::size_t p = positions.size();
    if (p < 2) throw ConfigError("log_hls_functional: p >= 2 required");
    check_gaps(positions);
    const auto& k = kern::active();

    std::vector<double> gaps(p - 1);
    for (std::size_t i = 0; i + 1 < p; ++i) gaps[i] = positions[i + 1] - positions[i];

    return -k.sum_log(gaps.data(), gaps.size()) +
           (2.0 / static_cast<double>(p)) * k.pairwise_log_sum(positions.data(), p);
}

namespace {

// F as a function of gaps, with its gap-gradient:
//   dF/dg_m = -1/g_m + (2/p) sum_{pairs i <= m < j} 1/(X_j - X_i).
double hls_value_grad(const std::vector<double>& gaps, std::vector<double>& grad) {
    const std::size_t p = gaps.size() + 1;
    std::vector<double> x(p, 0.0);
    for (std::size_t i = 1; i < p; ++i) x[i] = x[i - 1] + gaps[i - 1];

    double val = 0.0;
    for (double g : gaps) val -= std::log(g);
    for (std::size_t m = 0; m < gaps.size(); ++m) grad[m] = -1.0 / gaps[m];

    const double w = 2.0 / static_cast<double>(p);
    for (std::size_t i = 0; i + 1 < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const double d = x[j] - x[i];
            val += w * std::log(d);
            const double r = w / d;
            for (std::size_t m = i; m < j; ++m) grad[m] += r;
        }
    }
    return val;
}

}  // namespace

HlsMinimum log_hls_minimize(int p, std::uint64_t seed) {
    if (p < 2) throw ConfigError("log_hls_minimize: p >= 2 required");
    SplitMix64 rng(seed);
    const std::size_t m = static_cast<std::size_t>(p) - 1;

    // minimize over theta = log(gaps); the scale direction is flat, so plain
    // descent with backtracking settles on the invariant manifold
    std::vector<double> theta(m);
    for (auto& t : theta) t = rng.uniform(-1.5, 1.5);

    std::vector<double> gaps(m), ggrad(m), tgrad(m), trial(m);
    auto eval = [&](const std::vector<double>& th, std::vector<double>& grad_out) {
        for (std::size_t i = 0; i < m; ++i) gaps[i] = std::exp(th[i]);
        const double v = hls_value_grad(gaps, ggrad);
        for (std::size_t i = 0; i < m; ++i) grad_out[i] = ggrad[i] * gaps[i];
        return v;
    };

    double f = eval(theta, tgrad);
    int it = 0;
    const int max_iters = 2000;
    for (; it < max_iters; ++it) {
        double gnorm2 = 0;
        for (double g : tgrad) gnorm2 += g * g;
        if (std::sqrt(gnorm2) < 1e-12) break;

        double step = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < m; ++i) trial[i] = theta[i] - step * tgrad[i];
            std::vector<double> trial_grad(m);
            const double ft = eval(trial, trial_grad);
            if (ft <= f - 1e-4 * step * gnorm2) {
                theta = trial;
                tgrad = trial_grad;
                f = ft;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }

    HlsMinimum out;
    out.gaps.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.gaps[i] = std::exp(theta[i]);
    out.value = hls_value_grad(out.gaps, ggrad);
    double gn = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double g = ggrad[i] * out.gaps[i];
        gn += g * g;
    }
    out.grad_norm = std::sqrt(gn);
    out.iterations = it;
    return out;
}

}  // namespace ks
