#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "rsgbm/ctmc.hpp"
#include "rsgbm/errors.hpp"
#include "rsgbm/model.hpp"
#include "rsgbm/quadrature.hpp"
#include "rsgbm/series.hpp"

namespace rsgbm {

struct MomentResult {
    double t = 0.0;
    double mean = 0.0;
    double second_moment = 0.0;
    double variance = 0.0;
    double truncation_bound = 0.0;
    int terms_used = 0;
};

/// E[alpha(t)] in closed form: pi_0 t + pi_1 (1 - e^{-kappa t})/kappa with
/// kappa = lambda0 + lambda1 (chain started in state 0).
inline double expected_occupation0(const TwoStateModel& two, double t) {
    if (!(t >= 0.0)) throw DomainError("expected_occupation0: t must be >= 0");
    const double kappa = two.lambda0 + two.lambda1;
    const double pi0 = two.lambda1 / kappa;
    const double pi1 = two.lambda0 / kappa;
    return pi0 * t - pi1 * std::expm1(-kappa * t) / kappa;
}

namespace detail {

/// E[h(alpha(t))] for the chain started in state 0, via the k-series of the
/// sojourn law. Each term couples a log-space coefficient (the e^{(lam1-lam0)tu}
/// factor is shifted by M = max(0, (lam1-lam0)t) before exponentiation, so
/// nothing overflows near lambda*t ~ 700) with a [0,1] quadrature.
template <class H>
SeriesResult expect_h_alpha(const TwoStateModel& two, double t, H&& h,
                            const SeriesConfig& series = {}, const QuadConfig& quad = {}) {
    if (!(t > 0.0)) throw DomainError("expect_h_alpha: t must be > 0");
    const double l0 = two.lambda0, l1 = two.lambda1;
    const double c = l1 - l0;
    const double M = std::fmax(0.0, c * t);
    const double base_log = -l1 * t + M;
    const double lt = std::log(t), ll0 = std::log(l0), ll1 = std::log(l1);

    auto term = [&](int k) {
        auto f1 = [&](double u) {
            return std::pow(u, k - 1) * std::pow(1.0 - u, k - 1) * h(t * u) *
                   std::exp(c * t * u - M);
        };
        auto f2 = [&](double u) {
            return std::pow(u, k) * std::pow(1.0 - u, k - 1) * h(t * u) *
                   std::exp(c * t * u - M);
        };
        const double lg = std::lgamma(double(k));
        const double lg1 = k * ll0 + (k - 1) * ll1 + (2 * k - 1) * lt - 2.0 * lg + base_log;
        const double lg2 = k * (ll0 + ll1) + 2 * k * lt - lg - std::lgamma(k + 1.0) + base_log;
        const QuadResult i1 = adaptive_gl(f1, 0.0, 1.0, quad);
        const QuadResult i2 = adaptive_gl(f2, 0.0, 1.0, quad);
        return std::exp(lg1) * i1.value + std::exp(lg2) * i2.value;
    };

    SeriesConfig cfg = series;
    // Term magnitudes peak near k* = sqrt(l0*l1)*t/2; truncation bounds are
    // only trusted past the peak.
    cfg.min_terms = std::max(cfg.min_terms,
                             int(std::ceil(0.5 * std::sqrt(l0 * l1) * t)) + 10);
    SeriesResult res = accumulate_series(term, cfg);
    res.value += h(t) * std::exp(-l0 * t);  // atom: no jump up to t
    return res;
}

}  // namespace detail

/// E[Y_t] with Y_t = ln(X_t/X_0): Delta1*t + (Delta0-Delta1)*E[alpha(t)],
/// E[alpha(t)] evaluated by the k-series.
inline double mean_lnX(const TwoStateModel& two, double t,
                       const SeriesConfig& series = {}, const QuadConfig& quad = {}) {
    if (!(t > 0.0)) throw DomainError("mean_lnX: t must be > 0");
    SeriesResult ea = detail::expect_h_alpha(two, t, [](double s) { return s; }, series, quad);
    return two.delta1() * t + (two.delta0() - two.delta1()) * ea.value;
}

/// E[Y_t^2]: conditional on alpha(t)=s, Y_t is Gaussian with mean
/// Delta0*s + Delta1*(t-s) and variance sigma0^2 s + sigma1^2 (t-s).
inline double second_moment_lnX(const TwoStateModel& two, double t,
                                const SeriesConfig& series = {}, const QuadConfig& quad = {}) {
    if (!(t > 0.0)) throw DomainError("second_moment_lnX: t must be > 0");
    const double d0 = two.delta0(), d1 = two.delta1();
    const double s0 = two.base.sigma(0), s1 = two.base.sigma(1);
    auto h = [&](double s) {
        const double m = d0 * s + d1 * (t - s);
        return m * m + s0 * s0 * s + s1 * s1 * (t - s);
    };
    return detail::expect_h_alpha(two, t, h, series, quad).value;
}

inline MomentResult moments_lnX(const TwoStateModel& two, double t,
                                const SeriesConfig& series = {}, const QuadConfig& quad = {}) {
    if (!(t > 0.0)) throw DomainError("moments_lnX: t must be > 0");
    const double d0 = two.delta0(), d1 = two.delta1();
    const double s0 = two.base.sigma(0), s1 = two.base.sigma(1);
    SeriesResult ea = detail::expect_h_alpha(two, t, [](double s) { return s; }, series, quad);
    auto h2 = [&](double s) {
        const double m = d0 * s + d1 * (t - s);
        return m * m + s0 * s0 * s + s1 * s1 * (t - s);
    };
    SeriesResult e2 = detail::expect_h_alpha(two, t, h2, series, quad);

    MomentResult out;
    out.t = t;
    out.mean = d1 * t + (d0 - d1) * ea.value;
    out.second_moment = e2.value;
    out.truncation_bound = std::fabs(d0 - d1) * ea.tail_bound + e2.tail_bound;
    out.terms_used = std::max(ea.terms_used, e2.terms_used);
    double var = out.second_moment - out.mean * out.mean;
    if (var < -1e-10 * std::fmax(1.0, std::fabs(out.second_moment)))
        throw NumericalError("negative variance beyond tolerance in moments_lnX");
    out.variance = std::fmax(var, 0.0);
    return out;
}

/// lambda0 = lambda1 closed forms for (E[Y_t], E[Y_t^2]). The x < 1e-3 Taylor
/// branch avoids the cancellation in (2x - (1 - e^{-2x}))/(8x^2).
inline std::pair<double, double> closed_form_lambda_equal(const TwoStateModel& two, double t) {
    const double l0 = two.lambda0, l1 = two.lambda1;
    if (std::fabs(l0 - l1) > 1e-12 * std::fmax(l0, l1))
        throw DomainError("closed_form_lambda_equal requires lambda0 = lambda1");
    if (!(t > 0.0)) throw DomainError("closed_form_lambda_equal: t must be > 0");
    const double lam = 0.5 * (l0 + l1);
    const double x = lam * t;
    const double E = -std::expm1(-2.0 * x);  // 1 - e^{-2x}
    const double m1 = t * (0.5 + E / (4.0 * x));
    double q;
    if (x >= 1e-3) {
        q = (2.0 * x - E) / (8.0 * x * x);
    } else {
        q = 0.25 + x * (-1.0 / 6.0 + x * (1.0 / 12.0 + x * (-1.0 / 30.0 + x * (1.0 / 90.0 - x / 315.0))));
    }
    const double m2 = t * t * (0.25 + E / (4.0 * x) + q);

    const double d0 = two.delta0(), d1 = two.delta1();
    const double s0 = two.base.sigma(0), s1 = two.base.sigma(1);
    const double mean = d1 * t + (d0 - d1) * m1;
    const double second = d0 * d0 * m2 + 2.0 * d0 * d1 * (t * m1 - m2) +
                          d1 * d1 * (t * t - 2.0 * t * m1 + m2) +
                          s0 * s0 * m1 + s1 * s1 * (t - m1);
    return {mean, second};
}

/// t -> infinity rates: E[Y_t]/t -> (lam1*Delta0 + lam0*Delta1)/(lam0+lam1),
/// E[Y_t^2]/t^2 -> its square.
inline std::pair<double, double> asymptotic_rates(const TwoStateModel& two) {
    const double r = (two.lambda1 * two.delta0() + two.lambda0 * two.delta1()) /
                     (two.lambda0 + two.lambda1);
    return {r, r * r};
}

}  // namespace rsgbm
