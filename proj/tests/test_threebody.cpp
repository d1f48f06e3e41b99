#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ks1d/model.hpp"
#include "ks1d/rng.hpp"
#include "ks1d/threebody.hpp"

using namespace ks;

TEST_CASE("regime boundaries sit exactly at 4/3, 16/9, 2") {
    CHECK(threebody_params(1.0).regime == ThreeBodyRegime::subcritical);
    CHECK(threebody_params(4.0 / 3.0).regime == ThreeBodyRegime::subcritical);
    CHECK(threebody_params(std::nextafter(4.0 / 3.0, 2.0)).regime ==
          ThreeBodyRegime::triple_symmetric);
    CHECK(threebody_params(16.0 / 9.0).regime == ThreeBodyRegime::triple_symmetric);
    CHECK(threebody_params(std::nextafter(16.0 / 9.0, 2.0)).regime ==
          ThreeBodyRegime::triple_asymmetric);
    CHECK(threebody_params(2.0).regime == ThreeBodyRegime::rung);
    CHECK(threebody_params(2.5).regime == ThreeBodyRegime::pair);
    CHECK(threebody_params(2.5).alpha_bar == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(threebody_params(1.5).alpha3 == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("u_rhs: symmetric reduction and critical stationarity") {
    SplitMix64 rng(51);
    for (int rep = 0; rep < 50; ++rep) {
        const double u = rng.uniform(0.1, 2.0);
        const double chi = rng.uniform(0.5, 3.0);
        const auto [d1, d2] = u_rhs(u, u, chi);
        const double expect = (1.0 - 3.0 * chi / 4.0) / u;
        CHECK(d1 == doctest::Approx(expect).epsilon(1e-13));
        CHECK(d2 == doctest::Approx(expect).epsilon(1e-13));
    }
    const auto [c1, c2] = u_rhs(0.7, 0.7, 4.0 / 3.0);
    CHECK(std::abs(c1) <= 1e-15);
    CHECK(std::abs(c2) <= 1e-15);
    CHECK_THROWS_AS(u_rhs(0.0, 1.0, 1.5), SingularityError);
}

TEST_CASE("u_rhs agrees with gap differences of the full flow") {
    SplitMix64 rng(53);
    for (int rep = 0; rep < 100; ++rep) {
        const double u1 = rng.uniform(0.1, 1.5), u2 = rng.uniform(0.1, 1.5);
        const double chi = rng.uniform(0.5, 3.0);
        const auto [d1, d2] = u_rhs(u1, u2, chi);
        const auto v = flow_rhs(ParticleState(u_embed(u1, u2), chi));
        CHECK(std::abs(d1 - (v[1] - v[0])) <= 1e-12 * (1.0 + std::abs(d1)));
        CHECK(std::abs(d2 - (v[2] - v[1])) <= 1e-12 * (1.0 + std::abs(d2)));
    }
}

TEST_CASE("v_rhs vanishes at the stationary profiles") {
    {  // symmetric point, any chi in the triple-collapse band
        for (double chi : {1.4, 1.6, 16.0 / 9.0, 1.9}) {
            const double r = std::sqrt(2.0) / 2.0;
            const auto [d1, d2] = v_rhs(r, r, chi);
            CHECK(std::abs(d1) <= 1e-12);
            CHECK(std::abs(d2) <= 1e-12);
        }
    }
    {  // asymmetric pair at chi = 1.9, from the closed-form radicals
        const auto fp = fixed_points(1.9);
        REQUIRE(fp.asymmetric.has_value());
        CHECK(fp.asymmetric->first == doctest::Approx(0.154801).epsilon(1e-5));
        CHECK(fp.asymmetric->second == doctest::Approx(1.139985).epsilon(1e-5));
        CHECK(fp.product == doctest::Approx(0.176471).epsilon(1e-5));
        const auto [d1, d2] = v_rhs(fp.asymmetric->first, fp.asymmetric->second, 1.9);
        CHECK(std::abs(d1) <= 1e-9);
        CHECK(std::abs(d2) <= 1e-9);
        // mirror symmetry of the field
        const auto [m1, m2] = v_rhs(fp.asymmetric->second, fp.asymmetric->first, 1.9);
        CHECK(m1 == doctest::Approx(d2).epsilon(1e-12));
        CHECK(m2 == doctest::Approx(d1).epsilon(1e-12));
    }
}

TEST_CASE("fixed points: merge at 16/9 and degeneration toward the rung") {
    // at chi_bar the radicals coincide with the symmetric point
    const auto at_bar = fixed_points(16.0 / 9.0);
    CHECK(at_bar.merged);
    CHECK(!at_bar.asymmetric.has_value());  // strictly above chi_bar only

    const auto below = fixed_points(16.0 / 9.0 * (1.0 - 1e-6));
    CHECK(!below.asymmetric.has_value());

    const auto above = fixed_points(16.0 / 9.0 * (1.0 + 1e-6));
    REQUIRE(above.asymmetric.has_value());
    const double r = std::sqrt(2.0) / 2.0;
    CHECK(std::abs(above.asymmetric->first - r) <= 5e-3);
    CHECK(std::abs(above.asymmetric->second - r) <= 5e-3);
    CHECK(above.asymmetric->second - above.asymmetric->first >= 0.0);

    // toward the rung the lighter gap closes: limit (0, sqrt(3/2))
    const auto near2 = fixed_points(2.0 - 1e-8);
    REQUIRE(near2.asymmetric.has_value());
    CHECK(std::abs(near2.asymmetric->first) <= 1e-6);
    CHECK(std::abs(near2.asymmetric->second - std::sqrt(1.5)) <= 1e-6);
    CHECK(near2.product <= 1e-7);

    CHECK_THROWS_AS(fixed_points(1.2), ConfigError);
    CHECK_THROWS_AS(fixed_points(2.0), ConfigError);
}

TEST_CASE("fixed points satisfy the constraint curve to 1e-12") {
    for (double chi : {1.4, 1.6, 1.85, 1.9, 1.95, 1.999}) {
        const auto fp = fixed_points(chi);
        CHECK(std::abs(curve_residual(fp.symmetric.first, fp.symmetric.second)) <= 1e-12);
        if (fp.asymmetric) {
            CHECK(std::abs(curve_residual(fp.asymmetric->first, fp.asymmetric->second)) <=
                  1e-12);
            const auto [d1, d2] = v_rhs(fp.asymmetric->first, fp.asymmetric->second, chi);
            CHECK(std::hypot(d1, d2) <= 1e-9);
        }
    }
}

TEST_CASE("restricted eigenvalues flip sign at the symmetry-breaking value") {
    for (double chi : {1.4, 1.6}) {
        CHECK(restricted_eigenvalue(chi, {std::sqrt(0.5), std::sqrt(0.5)}) < 0.0);
    }
    // the pitchfork sits exactly at chi_bar: the restricted eigenvalue is zero
    CHECK(std::abs(restricted_eigenvalue(16.0 / 9.0, {std::sqrt(0.5), std::sqrt(0.5)})) <=
          1e-8);
    for (double chi : {1.85, 1.9, 1.95}) {
        CHECK(restricted_eigenvalue(chi, {std::sqrt(0.5), std::sqrt(0.5)}) > 0.0);
        const auto fp = fixed_points(chi);
        REQUIRE(fp.asymmetric.has_value());
        CHECK(restricted_eigenvalue(chi, *fp.asymmetric) < 0.0);
    }
}

TEST_CASE("the diagonal is invariant under the rescaled flow") {
    IntegratorConfig cfg;
    cfg.t_max = 4.0;
    cfg.tol = 1e-12;
    const auto traj = integrate_v(1.6, {0.5, 0.5}, cfg, /*project=*/false);
    for (int k = 0; k < traj.frames(); ++k) {
        auto [g1, g2] = gaps_of(traj.frame(k));
        CHECK(std::abs(g1 - g2) <= 1e-12);
    }
}

TEST_CASE("liouville classification in the symmetric regime") {
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(curve_point_above(0.10 + 0.055 * i));
    LiouvilleOptions opts;
    opts.tau_end = 20.0;
    const auto res = liouville_check(1.5, grid, opts);
    CHECK(res.on_curve_ok);
    CHECK(res.convergence_ok);
    CHECK(res.translates_ok);
    CHECK(res.max_drift <= opts.drift_tol);
}

TEST_CASE("liouville classification above the symmetry-breaking value") {
    std::vector<std::pair<double, double>> grid;
    for (double f : {0.05, 0.10, 0.30, 0.45, 0.60}) grid.push_back(curve_point_above(f));
    LiouvilleOptions opts;
    opts.tau_end = 8.0;
    opts.conv_tol = 1e-3;
    opts.align_tol = 1e-4;
    const auto res = liouville_check(1.9, grid, opts);
    CHECK(res.on_curve_ok);
    CHECK(res.convergence_ok);
    CHECK(res.translates_ok);
    // both heteroclinic branches are populated
    bool left = false, right = false;
    for (int b : res.branch) (b == 0 ? left : right) = true;
    CHECK(left);
    CHECK(right);
}

TEST_CASE("liouville grid validation") {
    CHECK_THROWS_AS(liouville_check(1.5, {{0.5, 0.5001}}, {}), ConfigError);
    CHECK_THROWS_AS(liouville_check(2.5, {curve_point_above(0.3)}, {}), ConfigError);
}

TEST_CASE("pair collapse analysis at chi = 2.5") {
    const auto pa = pair_collapse_analysis(2.5);
    CHECK(pa.alpha_bar == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pa.eigenvalues.first == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pa.eigenvalues.second == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(pa.linearization[0][0] == doctest::Approx(1.0));
    CHECK(pa.linearization[0][1] == doctest::Approx(-1.0));
    CHECK(pa.linearization[1][0] == 0.0);
    CHECK(pa.linearization[1][1] == doctest::Approx(-0.5));
    CHECK(std::abs(pa.v1_final - 1.0) <= 1e-3);
    CHECK(std::abs(pa.v2_log_slope - 0.5) <= 0.05 * 0.5);
    CHECK(pa.u2_minus_u1_monotone);
    CHECK(pa.translate_sup_diff <= 1e-3);
    CHECK_THROWS_AS(pair_collapse_analysis(1.9), ConfigError);
}

TEST_CASE("u-dynamics embedded as particles matches a direct RK4 of u_rhs") {
    // fixed-step fourth-order steps on both formulations; the gap variables
    // must agree to near roundoff
    const double chi = 1.7, dt = 5e-4;
    double u1 = 0.6, u2 = 0.9;
    std::vector<double> x = u_embed(u1, u2);
    std::vector<double> k1(3), k2(3), k3(3), k4(3), tmp(3);

    auto rk4_u = [&](double& a, double& b) {
        auto f = [&](double p, double q) { return u_rhs(p, q, chi); };
        const auto [a1, b1] = f(a, b);
        const auto [a2, b2] = f(a + 0.5 * dt * a1, b + 0.5 * dt * b1);
        const auto [a3, b3] = f(a + 0.5 * dt * a2, b + 0.5 * dt * b2);
        const auto [a4, b4] = f(a + dt * a3, b + dt * b3);
        a += dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
        b += dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
    };
    auto rk4_x = [&](std::vector<double>& y) {
        flow_rhs_raw(y, chi, k1);
        for (int i = 0; i < 3; ++i) tmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + 0.5 * dt * k1[static_cast<std::size_t>(i)];
        flow_rhs_raw(tmp, chi, k2);
        for (int i = 0; i < 3; ++i) tmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + 0.5 * dt * k2[static_cast<std::size_t>(i)];
        flow_rhs_raw(tmp, chi, k3);
        for (int i = 0; i < 3; ++i) tmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + dt * k3[static_cast<std::size_t>(i)];
        flow_rhs_raw(tmp, chi, k4);
        for (int i = 0; i < 3; ++i)
            y[static_cast<std::size_t>(i)] +=
                dt / 6.0 * (k1[static_cast<std::size_t>(i)] + 2 * k2[static_cast<std::size_t>(i)] +
                            2 * k3[static_cast<std::size_t>(i)] + k4[static_cast<std::size_t>(i)]);
    };

    for (int step = 0; step < 200; ++step) {
        rk4_u(u1, u2);
        rk4_x(x);
        CHECK(std::abs((x[1] - x[0]) - u1) <= 1e-10);
        CHECK(std::abs((x[2] - x[1]) - u2) <= 1e-10);
    }
}
