#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rsgbm/errors.hpp"
#include "rsgbm/model.hpp"
#include "rsgbm/quadrature.hpp"
#include "rsgbm/rng.hpp"
#include "rsgbm/series.hpp"

namespace rsgbm {

/// Invariant probability vector: pi Q = 0, sum pi = 1, pi > 0. Solved as the
/// bordered system [[Q^T, 1], [1^T, 0]] [pi; c] = [0; 1], which is square and
/// nonsingular for irreducible Q — no need to single out a dropped equation.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(Q.rows());
    if (n < 1 || Q.cols() != n) throw ModelError("Q must be square and nonempty");
    const double qscale = std::fmax(Q.cwiseAbs().maxCoeff(), 1e-300);
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i != j && Q(i, j) < 0.0) throw ModelError("negative off-diagonal rate");
            row += Q(i, j);
        }
        if (std::fabs(row) > 1e-12 * qscale)
            throw ModelError("Q row " + std::to_string(i) + " does not sum to 0");
    }
    if (!is_irreducible(Q)) throw IrreducibilityError("Q is reducible");
    if (n == 1) return Eigen::VectorXd::Ones(1);

    Eigen::MatrixXd B(n + 1, n + 1);
    B.topLeftCorner(n, n) = Q.transpose();
    B.topRightCorner(n, 1).setOnes();
    B.bottomLeftCorner(1, n).setOnes();
    B(n, n) = 0.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd sol = B.fullPivLu().solve(rhs);
    Eigen::VectorXd pi = sol.head(n);

    const double resid = (pi.transpose() * Q).cwiseAbs().maxCoeff();
    const double qnorm = Q.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(resid <= 1e-12 * qnorm))
        throw NumericalError("stationary distribution residual too large");
    for (int i = 0; i < n; ++i)
        if (!(pi(i) > 0.0)) throw NumericalError("stationary distribution not positive");
    return pi;
}

/// Solves Qu = v. Solvable iff pi.v = 0 (Fredholm alternative for the finite
/// chain); the free additive constant is fixed by the gauge sum_i pi_i u_i = 0.
/// The bordered system [[Q, 1], [pi^T, 0]] [u; c] = [v; 0] bakes the gauge in;
/// c comes out zero exactly when v has zero pi-mean.
inline Eigen::VectorXd fredholm_solve(const Eigen::MatrixXd& Q, const Eigen::VectorXd& pi,
                                      const Eigen::VectorXd& v) {
    const int n = static_cast<int>(Q.rows());
    if (pi.size() != n || v.size() != n) throw ModelError("fredholm_solve: size mismatch");
    const double vnorm = v.cwiseAbs().maxCoeff();
    if (std::fabs(pi.dot(v)) > 1e-10 * std::fmax(vnorm, 1e-300) && vnorm > 0.0)
        throw SolvabilityError("Qu = v unsolvable: v has nonzero pi-mean");

    Eigen::MatrixXd B(n + 1, n + 1);
    B.topLeftCorner(n, n) = Q;
    B.topRightCorner(n, 1).setOnes();
    B.bottomLeftCorner(1, n) = pi.transpose();
    B(n, n) = 0.0;
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = v;
    rhs(n) = 0.0;
    Eigen::VectorXd u = B.fullPivLu().solve(rhs).head(n);

    if (vnorm > 0.0) {
        // strictly negative for v != 0; equality would force v = 0
        const double quad = pi.cwiseProduct(v).dot(u);
        const double unorm = u.cwiseAbs().maxCoeff();
        if (quad > 1e-12 * std::fmax(1.0, vnorm * unorm))
            throw NumericalError("fredholm_solve: pi-weighted quadratic form not <= 0");
    }
    return u;
}

/// Exact chain trajectory on [0, T]: holding times Exponential(-q_ii), next
/// state with probability q_ij / (-q_ii).
inline RegimePath sample_path(const RegimeModel& model, double T, PhiloxStream& stream) {
    if (!(T > 0.0)) throw DomainError("sample_path: T must be > 0");
    RegimePath path;
    path.initial_state = model.initial_state;
    path.horizon = T;
    int state = model.initial_state;
    double t = 0.0;
    const int n = model.n_states;
    while (true) {
        const double rate = -model.Q(state, state);
        if (!(rate > 0.0)) break;  // n == 1: no jumps possible
        t += stream.exponential(rate);
        if (t >= T) break;
        if (n == 2) {
            state = 1 - state;
        } else {
            double u = stream.uniform_open() * rate;
            double acc = 0.0;
            int next = -1;
            for (int j = 0; j < n; ++j) {
                if (j == state) continue;
                acc += model.Q(state, j);
                if (u <= acc) {
                    next = j;
                    break;
                }
            }
            if (next < 0) {  // guard against roundoff at the top edge
                for (int j = n - 1; j >= 0; --j)
                    if (j != state && model.Q(state, j) > 0.0) {
                        next = j;
                        break;
                    }
            }
            state = next;
        }
        path.jump_times.push_back(t);
        path.states.push_back(state);
    }
    return path;
}

/// Piecewise accumulation of per-state time on [0, t]. The most-visited state
/// receives t minus the others' total, so the entries reproduce t to within
/// one rounding of the final sum.
inline OccupationTimes occupation_times(const RegimePath& path, double t) {
    if (!(t >= 0.0) || t > path.horizon)
        throw DomainError("occupation_times: t outside [0, horizon]");
    const int n_states =
        1 + std::max(path.initial_state,
                     path.states.empty()
                         ? path.initial_state
                         : *std::max_element(path.states.begin(), path.states.end()));
    OccupationTimes occ;
    occ.t = t;
    occ.per_state = Eigen::VectorXd::Zero(std::max(n_states, 2));
    int state = path.initial_state;
    double prev = 0.0;
    int longest = state;
    for (size_t k = 0; k < path.jump_times.size() && path.jump_times[k] < t; ++k) {
        occ.per_state(state) += path.jump_times[k] - prev;
        prev = path.jump_times[k];
        state = path.states[k];
    }
    occ.per_state(state) += t - prev;
    for (int i = 0; i < occ.per_state.size(); ++i)
        if (occ.per_state(i) > occ.per_state(longest)) longest = i;
    double others = 0.0;
    for (int i = 0; i < occ.per_state.size(); ++i)
        if (i != longest) others += occ.per_state(i);
    occ.per_state(longest) = std::fmax(t - others, 0.0);
    return occ;
}

struct SojournDensity {
    double density;  ///< continuous part at s
    double atom;     ///< point mass at s = t (chain never left state 0)
};

namespace detail {

/// ln of s^a (t-s)^b with the 0^0 = 1 convention, -inf when a true zero factor
/// kills the term.
inline double log_pow(double base, double e) {
    if (e == 0.0) return 0.0;
    if (base <= 0.0) return -std::numeric_limits<double>::infinity();
    return e * std::log(base);
}

}  // namespace detail

/// Occupation-time law of the state-0 sojourn alpha(t), chain started in 0:
/// continuous density on [0, t] plus the atom e^{-lambda0 t} at s = t. The
/// density is the modified-Bessel-type double series
///   e^{-l0 s - l1 (t-s)} sum_k [ l0^k l1^{k-1} (s(t-s))^{k-1} / G(k)^2
///                              + l0^k l1^k s^k (t-s)^{k-1} / (G(k) G(k+1)) ],
/// assembled term-by-term in log space so large rate-time products cannot
/// overflow before the exponential damping is applied.
inline SojournDensity sojourn_density(const TwoStateModel& model, double t, double s,
                                      const SeriesConfig& series = {}) {
    if (!(t > 0.0)) throw DomainError("sojourn_density: t must be > 0");
    if (!(s >= 0.0) || s > t) throw DomainError("sojourn_density: s outside [0, t]");
    const double l0 = model.lambda0, l1 = model.lambda1;
    const double atom = std::exp(-l0 * t);
    const double expo = -l0 * s - l1 * (t - s);

    SeriesConfig cfg = series;
    cfg.min_terms = std::max(cfg.min_terms,
                             static_cast<int>(2.0 * std::sqrt(l0 * l1 * s * (t - s))) + 3);
    auto term = [&](int k) {
        double t1 = expo + k * std::log(l0) + (k - 1) * std::log(l1) +
                    detail::log_pow(s, k - 1) + detail::log_pow(t - s, k - 1) -
                    2.0 * std::lgamma(k);
        double t2 = expo + k * std::log(l0) + k * std::log(l1) + detail::log_pow(s, k) +
                    detail::log_pow(t - s, k - 1) - std::lgamma(k) - std::lgamma(k + 1);
        return std::exp(t1) + std::exp(t2);
    };
    SeriesResult r = accumulate_series(term, cfg);
    return {r.value, atom};
}

/// CDF of alpha(t) (continuous part integrated by adaptive quadrature; the
/// atom is included once s reaches t).
inline double sojourn_cdf(const TwoStateModel& model, double t, double s,
                          const SeriesConfig& series = {}, const QuadConfig& quad = {}) {
    if (!(s >= 0.0)) return 0.0;
    if (s >= t) return 1.0;
    auto f = [&](double u) { return sojourn_density(model, t, u, series).density; };
    return adaptive_gl(f, 0.0, s, quad).value;
}

}  // namespace rsgbm
