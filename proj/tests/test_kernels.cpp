#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ks1d/kernels.hpp"
#include "ks1d/rng.hpp"

using namespace ks;

namespace {

// random strictly increasing configuration with gaps spanning many decades
std::vector<double> random_config(SplitMix64& rng, std::size_t n, double gap_lo,
                                  double gap_hi) {
    std::vector<double> x(n);
    x[0] = rng.uniform(-3.0, 3.0);
    const double lo = std::log(gap_lo), hi = std::log(gap_hi);
    for (std::size_t i = 1; i < n; ++i) x[i] = x[i - 1] + std::exp(rng.uniform(lo, hi));
    return x;
}

long double recip_sum_ld(const std::vector<double>& x, std::size_t i) {
    long double acc = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j == i) continue;
        acc += 1.0L / (static_cast<long double>(x[j]) - x[i]);
    }
    return acc;
}

}  // namespace

TEST_CASE("reciprocal sums match a long-double oracle, scalar and simd") {
    SplitMix64 rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + (rng.next() % 70);
        auto x = random_config(rng, n, 1e-8, 10.0);
        std::vector<double> a(n), b(n);
        kern::scalar().reciprocal_sums(x.data(), n, a.data());
        kern::active().reciprocal_sums(x.data(), n, b.data());
        for (std::size_t i = 0; i < n; ++i) {
            long double ref = recip_sum_ld(x, i);
            long double mag = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) mag += std::abs(1.0L / (static_cast<long double>(x[j]) - x[i]));
            const double tol = 1e-13 * static_cast<double>(mag) + 1e-300;
            CHECK(std::abs(static_cast<double>(ref - a[i])) <= tol);
            CHECK(std::abs(static_cast<double>(ref - b[i])) <= tol);
        }
    }
}

TEST_CASE("pairwise log sum: simd equals scalar") {
    SplitMix64 rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + (rng.next() % 90);
        auto x = random_config(rng, n, 1e-10, 100.0);
        const double a = kern::scalar().pairwise_log_sum(x.data(), n);
        const double b = kern::active().pairwise_log_sum(x.data(), n);
        const double scale = std::abs(a) + static_cast<double>(n * n);
        CHECK(std::abs(a - b) <= 1e-13 * scale);
    }
}

TEST_CASE("sum_log: simd equals scalar over wide magnitude range") {
    SplitMix64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + (rng.next() % 300);
        std::vector<double> v(n);
        for (auto& e : v) e = std::exp(rng.uniform(-200.0, 200.0));
        const double a = kern::scalar().sum_log(v.data(), n);
        const double b = kern::active().sum_log(v.data(), n);
        CHECK(std::abs(a - b) <= 1e-12 * (std::abs(a) + static_cast<double>(n)));
    }
}

TEST_CASE("exterior power sums: simd equals scalar, m = 2 and 4") {
    SplitMix64 rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 3 + (rng.next() % 60);
        auto x = random_config(rng, n, 1e-4, 5.0);
        const std::size_t q = rng.next() % (n - 1);
        const std::size_t p = q + rng.next() % (n - q - 1);  // proper subset
        for (int m : {2, 4}) {
            const double a = kern::scalar().exterior_power_sum(x.data(), n, q, p, m);
            const double b = kern::active().exterior_power_sum(x.data(), n, q, p, m);
            CHECK(std::abs(a - b) <= 1e-12 * (std::abs(a) + 1e-300));
        }
    }
}

TEST_CASE("force_scalar switches the active set") {
    kern::set_force_scalar(true);
    CHECK(std::string(kern::active().name) == "scalar");
    kern::set_force_scalar(false);
    if (kern::avx2_available()) CHECK(std::string(kern::active().name) == "avx2");
}
