#pragma once

#include <cstddef>

// Pairwise arithmetic kernels for ordered particle configurations.
//
// Every kernel has a plain scalar reference implementation and, on x86-64
// hosts with AVX2+FMA, a vectorized variant selected at runtime. The two are
// equivalence-tested against each other; callers go through active().
//
// Preconditions common to all kernels: inputs are finite doubles, positive
// where a logarithm or reciprocal is taken, and in the normal range
// (no denormals). The model layer validates ordering before calling.

namespace ks::kern {

struct KernelSet {
    const char* name;

    // out[i] = sum_{j != i} 1/(x[j] - x[i]) for each i in [0, n).
    void (*reciprocal_sums)(const double* x, std::size_t n, double* out);

    // sum_{i < j} log(x[j] - x[i]); requires x strictly increasing.
    double (*pairwise_log_sum)(const double* x, std::size_t n);

    // sum_k log(v[k]); requires v[k] > 0.
    double (*sum_log)(const double* v, std::size_t n);

    // sum over j outside [q,p], i inside [q,p] of (x[j]-x[i])^-m.
    // Window bounds are 0-based inclusive, m is 2 or 4.
    double (*exterior_power_sum)(const double* x, std::size_t n,
                                 std::size_t q, std::size_t p, int m);
};

const KernelSet& scalar();

bool avx2_available();
const KernelSet& avx2();  // only valid when avx2_available()

// avx2() when available, unless forced off; env KS1D_FORCE_SCALAR=1 forces
// the scalar set at startup.
const KernelSet& active();
void set_force_scalar(bool force);

}  // namespace ks::kern
