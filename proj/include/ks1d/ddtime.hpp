#pragma once

// Compensated (double-double) time accumulator. Near a blow-up the accepted
// step shrinks like the squared minimal gap and can drop below one ulp of the
// elapsed time, which would stall plain double accumulation before the gap
// threshold is reached. Carrying the rounding remainder fixes that, and the
// exact differences t_end - t_k it provides are what the blow-up-time fits
// consume.

namespace ks {

struct DDouble {
    double hi = 0.0;
    double lo = 0.0;

    double value() const { return hi + lo; }
};

// two-sum of a.hi + a.lo + b
inline DDouble dd_add(DDouble a, double b) {
    double s = a.hi + b;
    double bb = s - a.hi;
    double err = (a.hi - (s - bb)) + (b - bb);
    double lo = a.lo + err;
    double hi = s + lo;
    return {hi, lo - (hi - s)};
}

// (a - b) collapsed to double; accurate when a and b are close.
inline double dd_sub(DDouble a, DDouble b) {
    return (a.hi - b.hi) + (a.lo - b.lo);
}

}  // namespace ks
