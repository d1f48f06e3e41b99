#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ks {

// Strict ordering X_1 < ... < X_N was violated (a crossing means the
// integrator failed; it is surfaced, never silently repaired).
struct OrderingError : std::runtime_error {
    int i, j;  // offending 1-based indices, -1 if not pair-specific
    OrderingError(const std::string& what, int i_ = -1, int j_ = -1)
        : std::runtime_error(what), i(i_), j(j_) {}
};

// A gap underflowed to zero (or produced a non-finite reciprocal).
struct SingularityError : std::runtime_error {
    int i, j;  // offending 1-based pair
    SingularityError(const std::string& what, int i_ = -1, int j_ = -1)
        : std::runtime_error(what), i(i_), j(j_) {}
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Contiguous 1-based inclusive particle index range [q, p].
struct IndexWindow {
    int q = 1;
    int p = 1;

    int size() const { return p - q + 1; }
    int lo0() const { return q - 1; }  // 0-based first index
    int hi0() const { return p - 1; }  // 0-based last index, inclusive
    bool contains(int idx) const { return q <= idx && idx <= p; }
    bool valid_for(int n) const { return 1 <= q && q <= p && p <= n; }
    bool operator==(const IndexWindow&) const = default;
};

// Ordered positions of N equal-mass particles plus the sensitivity chi.
// The mass h_N = 1/(N+1) is derived from N, never stored independently.
class ParticleState {
  public:
    ParticleState(std::vector<double> positions, double chi);

    int n() const { return static_cast<int>(x_.size()); }
    double chi() const { return chi_; }
    double mass() const { return 1.0 / (n() + 1); }
    const std::vector<double>& positions() const { return x_; }

    double min_gap() const;

    struct Unchecked {};  // used by the integrator for frames it has validated
    ParticleState(Unchecked, std::vector<double> positions, double chi)
        : x_(std::move(positions)), chi_(chi) {}

  private:
    std::vector<double> x_;
    double chi_;
};

// Throws OrderingError / SingularityError if x is not strictly increasing or
// not finite.
void validate_ordered(const std::vector<double>& x);

// Decreasing family of critical sensitivities chi_N^k = (N+1)/k, k = 1..N,
// with chi_N = chi_N^N = (N+1)/N, and the location of chi within it.
struct CriticalLadder {
    enum class Position {
        interior,     // chi_N^k < chi < chi_N^{k-1} for k = k_star
        rung,         // chi equals some chi_N^k within tolerance (untreated
                      // transition case, reported distinctly)
        subcritical,  // chi < chi_N
    };

    int n = 0;
    double chi = 0;
    double chi_n = 0;            // (n+1)/n
    std::vector<double> chi_k;   // chi_k[k-1] = (n+1)/k
    Position position = Position::subcritical;
    int k_star = 0;  // interior: the critical count; rung: the matched k

    double rung(int k) const { return chi_k.at(static_cast<std::size_t>(k) - 1); }
};

inline constexpr double kRungEqualityTol = 1e-12;

CriticalLadder critical_ladder(int n, double chi);

}  // namespace ks
