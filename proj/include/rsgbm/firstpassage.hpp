#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "rsgbm/errors.hpp"
#include "rsgbm/mc.hpp"
#include "rsgbm/model.hpp"
#include "rsgbm/normal.hpp"
#include "rsgbm/quadrature.hpp"
#include "rsgbm/rng.hpp"
#include "rsgbm/series.hpp"

namespace rsgbm {

inline constexpr double kPi = std::numbers::pi;

/// The printed upper-bound series and the sojourn density it reweights differ
/// by one power of lambda0, and the printed F_l carries a_tilde where symmetry
/// with F_u expects sigma. Both readings are implemented; DensityConsistent is
/// the default because it is the variant that survives the MC sandwich.
enum class CoefficientVariant { DensityConsistent, AsPrinted };

inline const char* to_string(CoefficientVariant v) {
    return v == CoefficientVariant::DensityConsistent ? "density_consistent" : "as_printed";
}

struct FirstPassageQuery {
    TwoStateModel model;
    double x = 1.0;       // initial price
    double a = 0.5;       // absorbing barrier, 0 < a < x
    double T = 1.0;       // horizon
    double a_tilde = 0.0; // ln(x/a) > 0
};

inline FirstPassageQuery make_query(const TwoStateModel& model, double x, double a, double T) {
    if (!(x > 0.0)) throw DomainError("first passage: x must be > 0");
    if (!(a > 0.0 && a < x)) throw DomainError("first passage: barrier must satisfy 0 < a < x");
    if (!(T > 0.0)) throw DomainError("first passage: T must be > 0");
    return FirstPassageQuery{model, x, a, T, std::log(x / a)};
}

inline void validate_query(const FirstPassageQuery& q) {
    if (!(q.x > 0.0)) throw DomainError("first passage: x must be > 0");
    if (!(q.a > 0.0 && q.a < q.x)) throw DomainError("first passage: barrier must satisfy 0 < a < x");
    if (!(q.T > 0.0)) throw DomainError("first passage: T must be > 0");
    if (!(q.a_tilde > 0.0) ||
        std::fabs(q.a_tilde - std::log(q.x / q.a)) > 1e-12 * std::fmax(1.0, q.a_tilde))
        throw DomainError("first passage: a_tilde must equal ln(x/a)");
}

/// P(min_{s<=T} (drift*s + sigma*W_s) > -a_tilde) for Brownian motion.
inline double bm_no_cross(double a_tilde, double drift, double sigma, double T) {
    if (!(a_tilde > 0.0)) throw DomainError("bm_no_cross: a_tilde must be > 0");
    if (!(sigma > 0.0)) throw DomainError("bm_no_cross: sigma must be > 0");
    if (!(T > 0.0)) throw DomainError("bm_no_cross: T must be > 0");
    const double sq = sigma * std::sqrt(T);
    return phi((drift * T + a_tilde) / sq) -
           std::exp(-2.0 * drift * a_tilde / (sigma * sigma) + log_phi((drift * T - a_tilde) / sq));
}

/// Probability a Brownian bridge between two points above a barrier never
/// touches it: 1 - exp(-2(y_start-b)(y_end-b)/(sigma^2 dt)). An endpoint at or
/// below the barrier means the crossing already happened.
inline double bridge_no_cross(double y_start, double y_end, double b, double sigma, double dt) {
    if (!(sigma > 0.0)) throw DomainError("bridge_no_cross: sigma must be > 0");
    if (!(dt > 0.0)) throw DomainError("bridge_no_cross: dt must be > 0");
    const double ds = y_start - b, de = y_end - b;
    if (ds <= 0.0 || de <= 0.0) return 0.0;
    return -std::expm1(-2.0 * ds * de / (sigma * sigma * dt));
}

/// Deterministic boundary g(t) = a_tilde + Delta0*alpha(t) + Delta1*beta(t)
/// and its comparison envelopes given the endpoint occupation alpha(T). The
/// envelopes order the regime visits (all state-1 time first for g_u, all
/// state-0 time first for g_l) and agree with g at t = 0 and t = T.
struct BarrierEnvelope {
    double a_tilde = 0.0;
    double delta0 = 0.0;
    double delta1 = 0.0;
    double T = 0.0;
    double alpha_T = 0.0;

    double beta_T() const { return T - alpha_T; }
    double g(const OccupationTimes& occ) const {
        return a_tilde + delta0 * occ.alpha() + delta1 * occ.beta();
    }
    double g_u(double t) const {
        const double b = beta_T();
        return a_tilde + delta1 * std::fmin(t, b) + delta0 * std::fmax(0.0, t - b);
    }
    double g_l(double t) const {
        return a_tilde + delta0 * std::fmin(t, alpha_T) + delta1 * std::fmax(0.0, t - alpha_T);
    }
};

inline BarrierEnvelope make_envelope(const FirstPassageQuery& q, double alpha_T) {
    if (!(alpha_T >= 0.0 && alpha_T <= q.T))
        throw DomainError("envelope: alpha_T must lie in [0, T]");
    return BarrierEnvelope{q.a_tilde, q.model.delta0(), q.model.delta1(), q.T, alpha_T};
}

namespace detail {

inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

/// Both F integrals are standardized to u = (y + gmean)/sqrt(dur): the
/// gaussian factor is then order-one wide whatever dur is, so the adaptive
/// panels never chase a narrowing spike. |u| > 8.5 carries < 1e-17 mass.
inline QuadResult F_u_quad(double t, const FirstPassageQuery& q, const QuadConfig& quad) {
    const double T = q.T, at = q.a_tilde;
    const double d0 = q.model.delta0(), d1 = q.model.delta1();
    const double sigma = q.model.base.sigma(0);
    const double dur = T - t;  // beta(T) under the g_u ordering
    const double sqd = std::sqrt(dur), sqt = std::sqrt(t);
    const double gmean = (d1 * dur + at) / sigma;  // gaussian center in y is -gmean
    const double hi = std::fmin(8.5, gmean / sqd);  // y <= 0
    if (!(hi > -8.5)) return QuadResult{};
    auto f = [&](double u) {
        const double y = sqd * u - gmean;
        const double bridge = -std::expm1(2.0 * at * y / (sigma * dur));
        const double A = (d0 * t / sigma - y) / sqt;
        const double B = (d0 * t / sigma + y) / sqt;
        const double bracket = std::fmax(phi(A) - std::exp(2.0 * d0 * y / sigma + log_phi(B)), 0.0);
        return bridge * bracket * std::exp(-0.5 * u * u) * kInvSqrt2Pi;
    };
    return adaptive_gl(f, -8.5, hi, quad);
}

inline QuadResult F_l_quad(double t, const FirstPassageQuery& q, const QuadConfig& quad,
                           CoefficientVariant variant) {
    const double T = q.T, at = q.a_tilde;
    const double d0 = q.model.delta0(), d1 = q.model.delta1();
    const double sigma = q.model.base.sigma(0);
    const double dur = t;  // alpha(T) under the g_l ordering
    const double rem = T - t;
    const double sqd = std::sqrt(dur), sqr = std::sqrt(rem);
    const double gmean = (d0 * dur + at) / sigma;
    const double hi = std::fmin(8.5, gmean / sqd);
    if (!(hi > -8.5)) return QuadResult{};
    // Printed exponent denominator is a_tilde; symmetry with F_u says sigma.
    const double ed = variant == CoefficientVariant::DensityConsistent ? sigma : at;
    const bool dc = variant == CoefficientVariant::DensityConsistent;
    auto f = [&](double u) {
        const double y = sqd * u - gmean;
        const double bridge = -std::expm1(2.0 * at * y / (sigma * dur));
        const double A = (d1 * rem / sigma - y) / sqr;
        const double B = (d1 * rem / sigma + y) / sqr;
        double bracket = phi(A) - std::exp(2.0 * d1 * y / ed + log_phi(B));
        // The clamp is exact only when the bracket is the reflection-principle
        // probability; the as-printed variant must keep its raw value.
        if (dc) bracket = std::fmax(bracket, 0.0);
        return bridge * bracket * std::exp(-0.5 * u * u) * kInvSqrt2Pi;
    };
    return adaptive_gl(f, -8.5, hi, quad);
}

}  // namespace detail

/// Conditional no-cross weight for the g_u envelope given the switch point t.
inline double F_u(double t, const FirstPassageQuery& q, const QuadConfig& quad = {}) {
    if (!(t > 0.0 && t < q.T)) throw DomainError("F_u: t must lie in (0, T)");
    return detail::F_u_quad(t, q, quad).value;
}

/// Conditional no-cross weight for the g_l envelope given the switch point t.
inline double F_l(double t, const FirstPassageQuery& q, const QuadConfig& quad = {},
                  CoefficientVariant variant = CoefficientVariant::DensityConsistent) {
    if (!(t > 0.0 && t < q.T)) throw DomainError("F_l: t must lie in (0, T)");
    return detail::F_l_quad(t, q, quad, variant).value;
}

struct BoundsResult {
    double lower = 0.0;
    double upper = 0.0;
    double no_switch_term = 0.0;
    double truncation_bound = 0.0;
    double quadrature_error_estimate = 0.0;
    CoefficientVariant variant = CoefficientVariant::DensityConsistent;
    int terms_used = 0;
};

namespace detail {

/// One side of the first-passage sandwich: the no-switch atom plus the
/// switch-time integral of F against the exp-damped k-series kernel. Summing
/// the kernel pointwise keeps F to one evaluation per quadrature node;
/// t = T sin^2(theta) regularizes the endpoint weights t^{k-1}(T-t)^{k-1}.
struct BoundSide {
    double value = 0.0;
    double tail = 0.0;
    double quad_error = 0.0;
    int terms = 0;
};

inline BoundSide bound_side(const FirstPassageQuery& q, bool upper, CoefficientVariant variant,
                            const SeriesConfig& series, const QuadConfig& quad) {
    const double T = q.T;
    const double l0 = q.model.lambda0, l1 = q.model.lambda1;
    const bool dc = variant == CoefficientVariant::DensityConsistent;

    int terms_max = 0;
    double rel_tail_max = 0.0;

    // Switch-time kernel
    //   e^{-l0 t - l1 rem} sum_k [ c_k (t rem)^{k-1} + (l0 l1)^k t^k rem^{k-1}
    //                              / (Gamma(k) Gamma(k+1)) ]
    // where c_k = l0^{k or k-1} l1^{k-1} / Gamma(k)^2 depending on the variant.
    // Consecutive terms differ by elementary ratios, so no Gamma evaluations,
    // and the damping keeps every partial sum in range. Both families are
    // positive with ratios below u/k^2, so once that ratio drops under one the
    // geometric tail bound is rigorous.
    auto kernel = [&](double t, double rem) {
        const double damp = std::exp(-l0 * t - l1 * rem);
        const double u = l0 * l1 * t * rem;
        double a = (dc ? l0 : 1.0) * damp;
        double b = l0 * l1 * t * damp;
        double sum = a + b;
        for (int k = 1;; ++k) {
            const double r = u / (double(k) * k);
            if (k >= series.min_terms && r < 1.0 && (a + b) * r <= series.eps * sum * (1.0 - r)) {
                rel_tail_max = std::fmax(rel_tail_max, (a + b) * r / ((1.0 - r) * sum));
                terms_max = std::max(terms_max, k);
                return sum;
            }
            if (k >= series.max_terms)
                throw TruncationError("first-passage kernel did not converge within " +
                                          std::to_string(series.max_terms) + " terms",
                                      r < 1.0 ? (a + b) * r / (1.0 - r) : 1.0);
            a *= r;
            b *= u / (double(k) * (k + 1));
            sum += a + b;
        }
    };

    auto f = [&](double theta) {
        const double s = std::sin(theta), c = std::cos(theta);
        const double t = T * s * s, rem = T - t;
        if (t <= 0.0 || rem <= 0.0) return 0.0;
        const double jac = 2.0 * T * s * c;
        const double Fv =
            upper ? F_u_quad(t, q, quad).value : F_l_quad(t, q, quad, variant).value;
        return Fv * jac * kernel(t, rem);
    };
    QuadResult integral = adaptive_gl(f, 0.0, 0.5 * kPi, quad);

    BoundSide side;
    side.value = bm_no_cross(q.a_tilde, q.model.delta0(), q.model.base.sigma(0), T) *
                     std::exp(-l0 * T) +
                 integral.value;
    side.tail = rel_tail_max * std::fabs(integral.value);
    side.quad_error = integral.error_estimate;
    side.terms = terms_max;
    return side;
}

}  // namespace detail

/// Two-sided analytic sandwich for P(tau_a > T) under equal volatilities,
/// ordered drifts, and start in state 0.
inline BoundsResult bounds(const FirstPassageQuery& q,
                           CoefficientVariant variant = CoefficientVariant::DensityConsistent,
                           const SeriesConfig& series = {}, const QuadConfig& quad = {}) {
    validate_query(q);
    const double s0 = q.model.base.sigma(0), s1 = q.model.base.sigma(1);
    if (std::fabs(s0 - s1) > 1e-12 * std::fmax(s0, s1))
        throw DomainError("bounds: requires sigma0 = sigma1");
    if (q.model.delta0() > q.model.delta1())
        throw DomainError("bounds: requires Delta0 <= Delta1; relabel the regimes explicitly");

    detail::BoundSide up = detail::bound_side(q, /*upper=*/true, variant, series, quad);
    detail::BoundSide lo = detail::bound_side(q, /*upper=*/false, variant, series, quad);

    BoundsResult out;
    out.variant = variant;
    out.no_switch_term = bm_no_cross(q.a_tilde, q.model.delta0(), s0, q.T) *
                         std::exp(-q.model.lambda0 * q.T);
    out.truncation_bound = up.tail + lo.tail;
    out.quadrature_error_estimate = up.quad_error + lo.quad_error;
    out.terms_used = std::max(up.terms, lo.terms);
    const double slack = 1e-6;
    for (double v : {lo.value, up.value})
        if (v < -slack || v > 1.0 + slack)
            throw NumericalError("first-passage bound escapes [0,1] beyond tolerance: " +
                                 std::to_string(v));
    out.lower = std::fmin(std::fmax(lo.value, 0.0), 1.0);
    out.upper = std::fmin(std::fmax(up.value, 0.0), 1.0);
    return out;
}

enum class SlepianMode { Full, Eta0Zero, Eta0ZeroExact };

namespace detail {

/// Exact minimum of f(t) = z_start + b*(t - ts) + c*(sqrt(t) - sqrt(ts)) on
/// [ts, te]: quadratic in v = sqrt(t), interior critical point only when the
/// parabola opens upward.
inline double min_drift_sqrt(double z_start, double b, double c, double ts, double te) {
    const double vs = std::sqrt(ts), ve = std::sqrt(te);
    auto f = [&](double v) { return z_start + b * (v * v - ts) + c * (v - vs); };
    double m = std::fmin(z_start, f(ve));
    if (b > 0.0) {
        const double vstar = -c / (2.0 * b);
        if (vstar > vs && vstar < ve) m = std::fmin(m, f(vstar));
    }
    return m;
}

struct SlepianChunk {
    double sum = 0.0;
    double sum_sq = 0.0;
    double sum_coarse = 0.0;
};

}  // namespace detail

/// MC estimate of the Slepian comparison bound
/// P(min_t sqrt(sigma0^2-sigma1^2) B_{alpha(t)} + sqrt(t) sigma1 eta0
///        + Delta0 alpha(t) + Delta1 beta(t) + a_tilde > 0), an upper bound
/// for P(tau_a > T) when sigma0 > sigma1. State-1 stretches freeze B, so the
/// pathwise minimum there is exact; state-0 stretches use a refinement grid
/// with per-step bridge weights, and a half-resolution Richardson pass on the
/// same increments estimates the discretization bias. sigma0 = sigma1 is
/// admitted as the degenerate case (no Brownian term; the minimum is exact and
/// the estimate is an indicator mean).
inline MCEstimate slepian_upper(const FirstPassageQuery& q, const MCConfig& mc,
                                SlepianMode mode = SlepianMode::Full) {
    validate_query(q);
    validate_mc_config(mc);
    const double sg0 = q.model.base.sigma(0), sg1 = q.model.base.sigma(1);
    if (sg1 > sg0) throw DomainError("slepian_upper: requires sigma0 >= sigma1");
    const double s2 = std::fmax(sg0 * sg0 - sg1 * sg1, 0.0);
    const bool degenerate = s2 == 0.0;
    const double l0 = q.model.lambda0, l1 = q.model.lambda1;
    const double d0 = q.model.delta0(), d1 = q.model.delta1();
    const double T = q.T, at = q.a_tilde;
    const int R = mc.refinement;

    auto chunk_fn = [&](std::uint64_t, std::uint64_t begin,
                        std::uint64_t end) -> detail::SlepianChunk {
        detail::SlepianChunk acc;
        CompensatedSum sum, sum_sq, sum_coarse;
        for (std::uint64_t pi = begin; pi < end; ++pi) {
            PhiloxStream stream(mc.master_seed, pi);
            const double eta0 = mode == SlepianMode::Full ? stream.normal() : 0.0;
            const double c_eta = sg1 * eta0;
            double w_f = 1.0, w_c = 1.0;
            double t_cur = 0.0, z_cur = at;
            int state = 0;
            while (t_cur < T && (w_f > 0.0 || w_c > 0.0)) {
                const double rate = state == 0 ? l0 : l1;
                const double hold = stream.exponential(rate);
                const double t_next = std::fmin(t_cur + hold, T);
                const double dur = t_next - t_cur;
                if (dur <= 0.0) break;
                const double drift = state == 0 ? d0 : d1;
                if (state == 1 || degenerate) {
                    // No Brownian term varies here; the minimum is exact.
                    const double m = detail::min_drift_sqrt(z_cur, drift, c_eta, t_cur, t_next);
                    if (m <= 0.0) { w_f = 0.0; w_c = 0.0; }
                    z_cur += drift * dur + c_eta * (std::sqrt(t_next) - std::sqrt(t_cur));
                } else if (mode == SlepianMode::Eta0ZeroExact) {
                    const double z_next =
                        z_cur + drift * dur + std::sqrt(s2 * dur) * stream.normal();
                    const double b = bridge_no_cross(z_cur, z_next, 0.0, std::sqrt(s2), dur);
                    w_f *= b;
                    w_c *= b;
                    z_cur = z_next;
                } else {
                    const double h = dur / R;
                    const double sh = std::sqrt(s2 * h);
                    double z_prev = z_cur, z_even = z_cur;
                    for (int j = 1; j <= R; ++j) {
                        const double tj = t_cur + j * h;
                        const double z_next = z_prev + drift * h +
                                              c_eta * (std::sqrt(tj) - std::sqrt(tj - h)) +
                                              sh * stream.normal();
                        if (z_prev <= 0.0 || z_next <= 0.0)
                            w_f = 0.0;
                        else if (w_f > 0.0)
                            w_f *= -std::expm1(-2.0 * z_prev * z_next / (s2 * h));
                        if (R >= 2 && j % 2 == 0) {
                            if (z_even <= 0.0 || z_next <= 0.0)
                                w_c = 0.0;
                            else if (w_c > 0.0)
                                w_c *= -std::expm1(-2.0 * z_even * z_next / (s2 * 2.0 * h));
                            z_even = z_next;
                        }
                        z_prev = z_next;
                        if (w_f == 0.0 && (R < 2 || w_c == 0.0)) {
                            // Nothing left to weight; skip the rest of the grid.
                            break;
                        }
                    }
                    if (R < 2) w_c = w_f;
                    z_cur = z_prev;
                }
                t_cur = t_next;
                state ^= 1;
            }
            if (t_cur < T) { w_f = 0.0; w_c = 0.0; }  // left the loop dead
            sum.add(w_f);
            sum_sq.add(w_f * w_f);
            sum_coarse.add(w_c);
        }
        acc.sum = sum.value();
        acc.sum_sq = sum_sq.value();
        acc.sum_coarse = sum_coarse.value();
        return acc;
    };

    auto chunks = detail::map_chunks<detail::SlepianChunk>(mc.n_paths, chunk_fn);
    CompensatedSum s, s2sum, sc;
    for (const auto& c : chunks) {
        s.add(c.sum);
        s2sum.add(c.sum_sq);
        sc.add(c.sum_coarse);
    }
    const double n = double(mc.n_paths);
    MCEstimate est;
    est.n_paths = mc.n_paths;
    est.seed = mc.master_seed;
    est.value = s.value() / n;
    const double ss = s2sum.value() - s.value() * s.value() / n;
    est.std_error = std::sqrt(std::fmax(ss, 0.0) / (n - 1.0) / n);
    est.bias_estimate = est.value - sc.value() / n;
    detail::probability_interval(est, mc.confidence_level);
    return est;
}

}  // namespace rsgbm
