#include "ks1d/kernels.hpp"

#include <cmath>

namespace ks::kern {
namespace {

void reciprocal_sums_scalar(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double xi = x[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            acc += 1.0 / (x[j] - xi);
        }
        out[i] = acc;
    }
}

double pairwise_log_sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double xi = x[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            acc += std::log(x[j] - xi);
        }
    }
    return acc;
}

double sum_log_scalar(const double* v, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += std::log(v[k]);
    return acc;
}

double exterior_power_sum_scalar(const double* x, std::size_t n,
                                 std::size_t q, std::size_t p, int m) {
    double acc = 0.0;
    for (std::size_t i = q; i <= p; ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j >= q && j <= p) continue;
            const double r = 1.0 / (x[j] - xi);
            const double r2 = r * r;
            acc += (m == 2) ? r2 : r2 * r2;
        }
    }
    return acc;
}

}  // namespace

const KernelSet& scalar() {
    static const KernelSet set{
        "scalar",
        &reciprocal_sums_scalar,
        &pairwise_log_sum_scalar,
        &sum_log_scalar,
        &exterior_power_sum_scalar,
    };
    return set;
}

}  // namespace ks::kern
