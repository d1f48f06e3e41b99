#include "ks1d/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace ks::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline std::int64_t hsum_i64(__m256i v) {
    alignas(32) std::int64_t e[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(e), v);
    return e[0] + e[1] + e[2] + e[3];
}

// Accumulates sum(log v_k) over positive normal doubles as
// log(prod of mantissas) + log(2) * (sum of exponents). The mantissa product
// is renormalized by exponent extraction before it can overflow, so the only
// rounding comes from the multiplies themselves.
struct LogProductAcc {
    __m256d prod = _mm256_set1_pd(1.0);
    __m256i eacc = _mm256_setzero_si256();
    int blocks_since_renorm = 0;
    double tail = 0.0;  // scalar spill for remainders

    static constexpr std::int64_t kMantMask = 0x000FFFFFFFFFFFFFLL;
    static constexpr std::int64_t kOneBits = 0x3FF0000000000000LL;

    inline void push(__m256d v) {
        const __m256i bits = _mm256_castpd_si256(v);
        const __m256i expf = _mm256_srli_epi64(bits, 52);
        eacc = _mm256_add_epi64(eacc, _mm256_sub_epi64(expf, _mm256_set1_epi64x(1023)));
        const __m256i mant = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(kMantMask)),
                                             _mm256_set1_epi64x(kOneBits));
        prod = _mm256_mul_pd(prod, _mm256_castsi256_pd(mant));
        if (++blocks_since_renorm >= 256) renorm();
    }

    inline void push_scalar(double v) { tail += std::log(v); }

    void renorm() {
        const __m256i bits = _mm256_castpd_si256(prod);
        const __m256i expf = _mm256_srli_epi64(bits, 52);
        eacc = _mm256_add_epi64(eacc, _mm256_sub_epi64(expf, _mm256_set1_epi64x(1023)));
        const __m256i mant = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(kMantMask)),
                                             _mm256_set1_epi64x(kOneBits));
        prod = _mm256_castsi256_pd(mant);
        blocks_since_renorm = 0;
    }

    double finish() {
        renorm();
        alignas(32) double p[4];
        _mm256_store_pd(p, prod);
        const double ln2 = 0x1.62e42fefa39efp-1;
        return tail + std::log(p[0]) + std::log(p[1]) + std::log(p[2]) + std::log(p[3]) +
               ln2 * static_cast<double>(hsum_i64(eacc));
    }
};

// Antisymmetry halves the divisions: each pair reciprocal is computed once,
// added into out[i] and subtracted from out[j].
void reciprocal_sums_avx2(const double* x, std::size_t n, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const __m256d xi = _mm256_set1_pd(x[i]);
        __m256d acc = _mm256_setzero_pd();
        double tail = 0.0;
        std::size_t j = i + 1;
        for (; j + 4 <= n; j += 4) {
            const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + j), xi);
            const __m256d r = _mm256_div_pd(one, d);
            acc = _mm256_add_pd(acc, r);
            _mm256_storeu_pd(out + j, _mm256_sub_pd(_mm256_loadu_pd(out + j), r));
        }
        for (; j < n; ++j) {
            const double r = 1.0 / (x[j] - x[i]);
            tail += r;
            out[j] -= r;
        }
        out[i] += hsum(acc) + tail;
    }
}

double pairwise_log_sum_avx2(const double* x, std::size_t n) {
    LogProductAcc acc;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const __m256d xi = _mm256_set1_pd(x[i]);
        std::size_t j = i + 1;
        for (; j + 4 <= n; j += 4) {
            acc.push(_mm256_sub_pd(_mm256_loadu_pd(x + j), xi));
        }
        for (; j < n; ++j) acc.push_scalar(x[j] - x[i]);
    }
    return acc.finish();
}

double sum_log_avx2(const double* v, std::size_t n) {
    LogProductAcc acc;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) acc.push(_mm256_loadu_pd(v + k));
    for (; k < n; ++k) acc.push_scalar(v[k]);
    return acc.finish();
}

double exterior_power_sum_avx2(const double* x, std::size_t n,
                               std::size_t q, std::size_t p, int m) {
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d acc = _mm256_setzero_pd();
    double tail = 0.0;
    for (std::size_t i = q; i <= p; ++i) {
        const __m256d xi = _mm256_set1_pd(x[i]);
        auto run = [&](std::size_t j0, std::size_t j1) {
            std::size_t j = j0;
            for (; j + 4 <= j1; j += 4) {
                const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + j), xi);
                const __m256d r = _mm256_div_pd(one, d);
                __m256d r2 = _mm256_mul_pd(r, r);
                if (m == 4) r2 = _mm256_mul_pd(r2, r2);
                acc = _mm256_add_pd(acc, r2);
            }
            for (; j < j1; ++j) {
                const double r = 1.0 / (x[j] - x[i]);
                const double r2 = r * r;
                tail += (m == 2) ? r2 : r2 * r2;
            }
        };
        run(0, q);
        run(p + 1, n);
    }
    return hsum(acc) + tail;
}

}  // namespace

bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const KernelSet& avx2() {
    static const KernelSet set{
        "avx2",
        &reciprocal_sums_avx2,
        &pairwise_log_sum_avx2,
        &sum_log_avx2,
        &exterior_power_sum_avx2,
    };
    return set;
}

}  // namespace ks::kern

#else  // non-x86 or AVX2 not enabled for this TU

namespace ks::kern {
bool avx2_available() { return false; }
const KernelSet& avx2() { return scalar(); }
}  // namespace ks::kern

#endif
