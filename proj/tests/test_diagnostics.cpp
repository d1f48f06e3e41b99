#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ks1d/blowup.hpp"
#include "ks1d/diagnostics.hpp"
#include "ks1d/integrate.hpp"
#include "ks1d/kernels.hpp"
#include "ks1d/rng.hpp"

using namespace ks;

TEST_CASE("window stats on the symmetric triple") {
    std::vector<double> x{-1.0, 0.0, 1.0};
    const auto st = window_stats(x, IndexWindow{1, 3});
    CHECK(st.mean == 0.0);
    CHECK(st.variance == 2.0);
}

TEST_CASE("window stats: singleton and fixed-point variants") {
    std::vector<double> x{0.0, 1.0, 2.0, 10.0};
    const auto single = window_stats(x, IndexWindow{2, 2});
    CHECK(single.variance == 0.0);
    CHECK(single.mean == 1.0);
    const auto about = window_stats(x, IndexWindow{1, 3}, 1.0);
    REQUIRE(about.variance_about.has_value());
    CHECK(*about.variance_about == 2.0);
    CHECK_THROWS_AS(window_stats(x, IndexWindow{3, 2}), ConfigError);
}

TEST_CASE("exterior potential hand sums") {
    const ParticleState s({0.0, 1.0, 2.0, 10.0}, 1.0);
    const IndexWindow w{1, 3};
    const double h2 = exterior_potential(s, w, 2).value;
    const double h4 = exterior_potential(s, w, 4).value;
    CHECK(h2 == doctest::Approx(1.0 / 100 + 1.0 / 81 + 1.0 / 64).epsilon(1e-14));
    CHECK(h4 == doctest::Approx(1.0 / 1e4 + 1.0 / 6561 + 1.0 / 4096).epsilon(1e-14));
    CHECK(h4 <= h2 * h2);
    CHECK_THROWS_AS(exterior_potential(s, IndexWindow{1, 4}, 2), ConfigError);
    CHECK_THROWS_AS(exterior_potential(s, w, 3), ConfigError);
}

TEST_CASE("l4 never exceeds l2: H4 <= H2^2 on random states") {
    SplitMix64 rng(31);
    for (int rep = 0; rep < 500; ++rep) {
        const int n = 4 + static_cast<int>(rng.next() % 8);
        std::vector<double> x(static_cast<std::size_t>(n));
        x[0] = rng.uniform(-1.0, 1.0);
        for (int i = 1; i < n; ++i)
            x[static_cast<std::size_t>(i)] =
                x[static_cast<std::size_t>(i) - 1] + std::exp(rng.uniform(-4.0, 1.0));
        const int q = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n - 1));
        const int p =
            q + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n - q));
        const IndexWindow w{q, std::min(p, n - 1)};
        const double h2 = kern::scalar().exterior_power_sum(
            x.data(), static_cast<std::size_t>(n), static_cast<std::size_t>(w.lo0()),
            static_cast<std::size_t>(w.hi0()), 2);
        const double h4 = kern::scalar().exterior_power_sum(
            x.data(), static_cast<std::size_t>(n), static_cast<std::size_t>(w.lo0()),
            static_cast<std::size_t>(w.hi0()), 4);
        CHECK(h4 <= h2 * h2 * (1.0 + 1e-12));
    }
}

TEST_CASE("T1 identity: -p(p+1)/2 on a thousand random windows") {
    SplitMix64 rng(37);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 3 + static_cast<int>(rng.next() % 12);
        std::vector<double> x(static_cast<std::size_t>(n));
        x[0] = rng.uniform(-2.0, 2.0);
        for (int i = 1; i < n; ++i)
            x[static_cast<std::size_t>(i)] =
                x[static_cast<std::size_t>(i) - 1] + rng.uniform(0.1, 2.0);
        const int q = 1 + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n));
        const int p = q + static_cast<int>(rng.next() %
                                           static_cast<std::uint64_t>(n - q + 1));
        const IndexWindow w{q, std::min(p, n)};
        const double expect = -0.5 * (w.size() - 1.0) * w.size();
        CHECK(std::abs(t1_pair_identity(x, w) - expect) <=
              1e-10 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("stability constants at the N=49 working point") {
    const auto c = stability_constants(49, 1.64, 31);
    CHECK(c.alpha == doctest::Approx(30.0 * (1.64 * 31.0 / 50.0 - 1.0)).epsilon(1e-14));
    CHECK(c.alpha == doctest::Approx(0.504).epsilon(1e-12));
    const double gamma = 12.0 + 14.0 * 1.64 + 4.0 * std::pow(49.0, 0.25);
    CHECK(c.gamma_n == doctest::Approx(gamma).epsilon(1e-15));
    const double bound1 = c.alpha / (2.0 * gamma);
    const double bound2 = 0.125 * c.alpha * c.alpha / (2.0 + 2.0 * 1.64 / 7.0);
    CHECK(c.c_n == doctest::Approx(std::min(bound1, bound2)).epsilon(1e-15));
    CHECK(c.c_n == doctest::Approx(0.005534).epsilon(2e-4));
    CHECK(bound2 == doctest::Approx(0.031752 / 2.468571).epsilon(1e-5));
    CHECK(c.beta == doctest::Approx(4.0 * gamma * c.c_n * c.c_n).epsilon(1e-15));
    CHECK(c.blowup_time_bound(0.0, 1e-3) == doctest::Approx(1e-3 / 0.504).epsilon(1e-10));
}

TEST_CASE("stability constants: three-particle rung") {
    const auto c = stability_constants(3, 1.5, 3);
    CHECK(c.alpha == doctest::Approx(0.25).epsilon(1e-14));  // 2 (1.5 * 3/4 - 1)
    CHECK_THROWS_AS(stability_constants(3, 2.5, 3), ConfigError);
    CHECK_THROWS_AS(stability_constants(3, 2.0, 2), ConfigError);
}

TEST_CASE("stability membership on a constructed clustered state") {
    const int n = 49, k = 31;
    const double chi = 1.64, eps = 1e-3;
    const auto c = stability_constants(n, chi, k);

    // inner particles over width sqrt(eps)/10, outer beyond
    // 10 sqrt(eps k / C_N)
    std::vector<double> x;
    const double w = std::sqrt(eps) / 10.0;
    const double d = 10.0 * std::sqrt(eps * k / c.c_n);
    const int n_left = (n - k) / 2, n_right = n - k - n_left;
    for (int j = n_left; j >= 1; --j) x.push_back(-d * j);
    for (int i = 0; i < k; ++i) x.push_back(-0.5 * w + w * i / (k - 1.0));
    for (int j = 1; j <= n_right; ++j) x.push_back(d * j);
    const ParticleState s(x, chi);

    const auto found = stability_membership(s, k, eps);
    REQUIRE(found.has_value());
    CHECK(found->size() == k);
    CHECK(found->q == n_left + 1);

    // eps shrunk a hundredfold: the same state no longer qualifies
    CHECK(!stability_membership(s, k, eps / 100.0).has_value());

    // translation invariance
    auto xt = x;
    for (auto& v : xt) v += 3.25;
    CHECK(stability_membership(ParticleState(xt, chi), k, eps) == found);
}

TEST_CASE("lemma 3.2 residuals: full window collapses to the exact law") {
    IntegratorConfig cfg;
    cfg.monitor_stride = 2;
    const auto traj = integrate(ParticleState({-0.5, 0.0, 0.5}, 2.0), cfg);
    const auto res = lemma32_residuals(traj, IndexWindow{1, 3});
    CHECK(res.all_within_slack);
    // with an empty exterior the drift term is the law itself
    for (double r : res.r_variance) CHECK(r <= res.slack[0] + 1e-12);
}

TEST_CASE("lemma 3.2 residuals hold along a clustered collapse") {
    IntegratorConfig cfg;
    const auto s0 = clustered_initial_data(9, 2.2, 5, 1e-3, 4.0, 11u);
    const auto traj = integrate(s0, cfg);
    REQUIRE(traj.stop_reason == StopReason::gap_collapse);
    const auto res = lemma32_residuals(traj, IndexWindow{3, 7});
    CHECK(res.all_within_slack);
    CHECK_THROWS_AS(lemma32_residuals(traj, IndexWindow{0, 3}), ConfigError);
}
