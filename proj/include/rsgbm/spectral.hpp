#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "rsgbm/ctmc.hpp"
#include "rsgbm/errors.hpp"
#include "rsgbm/model.hpp"

namespace rsgbm {

/// A_p = Q + diag(lambda_0(p), ..., lambda_N(p)).
inline Eigen::MatrixXd build_Ap(const RegimeModel& model, double p) {
    if (!(p >= 0.0)) throw DomainError("moment order p must be >= 0");
    Eigen::MatrixXd A = model.Q;
    DerivedRates rates(model);
    A.diagonal() += rates.lambda_p(p);
    return A;
}

/// Spectral data for one moment order: eta_p = -max Re Spec(A_p), and the
/// moment Lyapunov exponent lim (1/t) ln E[X_t^p] = -eta_p.
struct SpectralReport {
    double p = 0.0;
    Eigen::MatrixXd A_p;
    Eigen::VectorXcd eigenvalues;
    double eta_p = 0.0;
    double growth_rate = 0.0;  // -eta_p
};

namespace detail {

/// Largest real part among the eigenvalues of a real 2x2, by the quadratic
/// formula. Cross-check oracle for the QR path.
inline double max_re_2x2(const Eigen::MatrixXd& A) {
    const double tr2 = 0.5 * (A(0, 0) + A(1, 1));
    const double disc = 0.25 * (A(0, 0) - A(1, 1)) * (A(0, 0) - A(1, 1)) + A(0, 1) * A(1, 0);
    return disc >= 0.0 ? tr2 + std::sqrt(disc) : tr2;
}

}  // namespace detail

inline SpectralReport spectral_report(const RegimeModel& model, double p) {
    SpectralReport rep;
    rep.p = p;
    rep.A_p = build_Ap(model, p);
    const int n = model.n_states;
    if (n == 1) {
        rep.eigenvalues = Eigen::VectorXcd::Constant(1, rep.A_p(0, 0));
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(rep.A_p, /*computeEigenvectors=*/false);
        if (solver.info() != Eigen::Success)
            throw NumericalError("eigensolve did not converge for A_p, p=" + std::to_string(p));
        rep.eigenvalues = solver.eigenvalues();
    }
    double max_re = rep.eigenvalues(0).real();
    for (int i = 1; i < rep.eigenvalues.size(); ++i)
        max_re = std::fmax(max_re, rep.eigenvalues(i).real());
    if (n == 2) {
        const double closed = detail::max_re_2x2(rep.A_p);
        if (std::fabs(closed - max_re) > 1e-10 * std::fmax(1.0, std::fabs(closed)))
            throw NumericalError("2x2 eigensolve disagrees with the closed form");
    }
    rep.eta_p = -max_re;
    rep.growth_rate = max_re;
    return rep;
}

inline double eta_p(const RegimeModel& model, double p) {
    return spectral_report(model, p).eta_p;
}

struct CurvePoint {
    double p;
    double growth_rate;
    double eta_p;
    double max_eig_real;
    double max_eig_imag;
};

struct LyapunovCurve {
    std::vector<CurvePoint> points;
    bool convex = true;              // p -> -eta_p has nonnegative second differences
    double min_second_difference = 0.0;
};

/// Pointwise moment-Lyapunov curve with a convexity diagnostic: second
/// differences of the growth rate below -1e-8 are flagged rather than hidden.
inline LyapunovCurve lyapunov_curve(const RegimeModel& model,
                                    const std::vector<double>& p_grid) {
    if (p_grid.empty()) throw DomainError("lyapunov_curve: empty p grid");
    LyapunovCurve curve;
    curve.points.reserve(p_grid.size());
    for (double p : p_grid) {
        SpectralReport rep = spectral_report(model, p);
        double max_im = 0.0;
        double max_re = -rep.eta_p;
        for (int i = 0; i < rep.eigenvalues.size(); ++i)
            if (std::fabs(rep.eigenvalues(i).real() - max_re) <= 1e-12 * std::fmax(1.0, std::fabs(max_re)))
                max_im = std::fmax(max_im, std::fabs(rep.eigenvalues(i).imag()));
        curve.points.push_back({p, rep.growth_rate, rep.eta_p, max_re, max_im});
    }
    for (size_t i = 1; i + 1 < curve.points.size(); ++i) {
        const double h1 = curve.points[i].p - curve.points[i - 1].p;
        const double h2 = curve.points[i + 1].p - curve.points[i].p;
        const double d2 = (curve.points[i + 1].growth_rate - curve.points[i].growth_rate) / h2 -
                          (curve.points[i].growth_rate - curve.points[i - 1].growth_rate) / h1;
        curve.min_second_difference = std::fmin(curve.min_second_difference, d2);
        if (d2 < -1e-8) curve.convex = false;
    }
    return curve;
}

/// Almost-sure exponential growth rate of ln X_t: sum_i pi_i Delta_i.
inline double almost_sure_growth(const RegimeModel& model) {
    validate_model(model);
    Eigen::VectorXd pi = stationary_distribution(model.Q);
    DerivedRates rates(model);
    return pi.dot(rates.delta);
}

enum class RecurrenceClass { TRANSIENT, NULL_RECURRENT };
enum class AsLimit { TO_INFINITY, TO_ZERO, NO_LIMIT_CLAIMED };

inline const char* to_string(RecurrenceClass c) {
    return c == RecurrenceClass::TRANSIENT ? "TRANSIENT" : "NULL_RECURRENT";
}
inline const char* to_string(AsLimit l) {
    switch (l) {
        case AsLimit::TO_INFINITY: return "TO_INFINITY";
        case AsLimit::TO_ZERO: return "TO_ZERO";
        default: return "NO_LIMIT_CLAIMED";
    }
}

/// The trichotomy is exact-real mathematics; a float implementation has to
/// expose how it decided "zero", so the tolerance used is part of the result.
struct Classification {
    double mean_drift = 0.0;  // sum_i pi_i Delta_i
    RecurrenceClass recurrence_class = RecurrenceClass::NULL_RECURRENT;
    AsLimit as_limit = AsLimit::NO_LIMIT_CLAIMED;
    double tolerance_used = 0.0;
};

/// Transient iff the pi-mean drift is nonzero (beyond tolerance); the sign
/// gives the a.s. limit of X_t. Default tolerance scales with the model:
/// 1e-12 * max_i(|mu_i| + sigma_i^2).
inline Classification classify(const RegimeModel& model, double tolerance = -1.0) {
    Classification c;
    if (tolerance < 0.0) {
        double scale = 0.0;
        for (int i = 0; i < model.n_states; ++i)
            scale = std::fmax(scale, std::fabs(model.mu(i)) + model.sigma(i) * model.sigma(i));
        tolerance = 1e-12 * scale;
    }
    c.tolerance_used = tolerance;
    c.mean_drift = almost_sure_growth(model);
    if (c.mean_drift > tolerance) {
        c.recurrence_class = RecurrenceClass::TRANSIENT;
        c.as_limit = AsLimit::TO_INFINITY;
    } else if (c.mean_drift < -tolerance) {
        c.recurrence_class = RecurrenceClass::TRANSIENT;
        c.as_limit = AsLimit::TO_ZERO;
    } else {
        c.recurrence_class = RecurrenceClass::NULL_RECURRENT;
        c.as_limit = AsLimit::NO_LIMIT_CLAIMED;
    }
    return c;
}

}  // namespace rsgbm
