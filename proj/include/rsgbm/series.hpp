#pragma once

#include <cmath>
#include <cstdint>

#include "rsgbm/errors.hpp"

namespace rsgbm {

/// Neumaier-compensated accumulator. Used everywhere a sum must not depend on
/// how work was chunked (the carry makes fixed-order reduction bit-stable).
class CompensatedSum {
public:
    void add(double x) {
        double t = s_ + x;
        if (std::fabs(s_) >= std::fabs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

struct SeriesConfig {
    double eps = 1e-12;  ///< target: certified tail <= eps * |partial sum|
    int max_terms = 500;
    int min_terms = 5;  ///< ratio test armed only past the expected term peak
};

struct SeriesResult {
    double value;
    double tail_bound;  ///< certified geometric bound on the dropped tail
    int terms_used;
};

/// Sums term(1) + term(2) + ... for series whose term magnitudes eventually
/// decay with a decreasing ratio (Bessel-type: ratio ~ (lambda t)^2/k^2).
/// Once |t_{k}| < |t_{k-1}| past min_terms, the dropped tail is bounded by the
/// geometric series with the last observed ratio; iteration stops when that
/// bound falls below eps * |partial sum|.
template <class TermFn>
SeriesResult accumulate_series(TermFn&& term, const SeriesConfig& cfg = {}) {
    CompensatedSum sum;
    double prev_mag = -1.0;
    int zero_run = 0;
    for (int k = 1; k <= cfg.max_terms; ++k) {
        double t = term(k);
        if (!std::isfinite(t)) throw NumericalError("series term not finite");
        sum.add(t);
        double mag = std::fabs(t);
        if (k >= cfg.min_terms) {
            if (mag == 0.0) {
                if (++zero_run >= 2) return {sum.value(), 0.0, k};
            } else {
                zero_run = 0;
                if (prev_mag > 0.0 && mag < prev_mag) {
                    double r = mag / prev_mag;
                    double tail = mag * r / (1.0 - r);
                    double scale = std::fmax(std::fabs(sum.value()), 1e-300);
                    if (tail <= cfg.eps * scale) return {sum.value(), tail, k};
                }
            }
        }
        prev_mag = mag;
    }
    throw TruncationError("series did not meet the tail target within the term budget",
                          prev_mag);
}

}  // namespace rsgbm
