#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ks1d/state.hpp"

// The discrete free energy on ordered configurations X_1 < ... < X_N,
//
//   E(X) = - sum_{i=1}^{N-1} log(X_{i+1} - X_i)
//          + chi h_N sum_{i != j} log|X_i - X_j|,      h_N = 1/(N+1),
//
// and its euclidean gradient flow  dX/dt = -grad E(X). The interaction double
// sum runs over ordered pairs both ways; it is computed over unordered pairs
// and doubled, which is exactly symmetric.

namespace ks {

double energy(const ParticleState& s);
std::vector<double> flow_rhs(const ParticleState& s);

// Span versions for hot loops; they validate ordering/finiteness themselves.
double energy_raw(std::span<const double> x, double chi);
void flow_rhs_raw(std::span<const double> x, double chi, std::span<double> out);

// Scale-invariant functional behind the non-constant-mass discrete
// logarithmic HLS inequality for p >= 2 particles:
//   F(X) = - sum log(gaps) + (1/p) sum_{i != j} log|X_i - X_j|  >=  0.
double log_hls_functional(std::span<const double> positions);

// Gradient-descent minimizer of F over gap space (the functional is
// translation and scale invariant, so gaps determine it). Used to probe the
// inequality empirically.
struct HlsMinimum {
    std::vector<double> gaps;
    double value = 0;
    double grad_norm = 0;
    int iterations = 0;
};
HlsMinimum log_hls_minimize(int p, std::uint64_t seed);

}  // namespace ks
