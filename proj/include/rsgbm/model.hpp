#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "rsgbm/errors.hpp"

namespace rsgbm {

/// Regime-switching GBM: dX = mu_i X dt + sigma_i X dB while the modulating
/// chain (generator Q) sits in state i. Immutable after validation; safe to
/// share across threads.
struct RegimeModel {
    int n_states = 0;
    Eigen::MatrixXd Q;      // rate per unit time, rows sum to zero
    Eigen::VectorXd mu;     // drift per unit time
    Eigen::VectorXd sigma;  // volatility per sqrt(time)
    double x0 = 1.0;        // initial price
    int initial_state = 0;
};

namespace detail {

inline void reach(const Eigen::MatrixXd& Q, int start, bool transpose,
                  std::vector<char>& seen) {
    std::vector<int> stack{start};
    seen.assign(static_cast<size_t>(Q.rows()), 0);
    seen[static_cast<size_t>(start)] = 1;
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        for (int j = 0; j < Q.rows(); ++j) {
            double rate = transpose ? Q(j, i) : Q(i, j);
            if (j != i && rate > 0.0 && !seen[static_cast<size_t>(j)]) {
                seen[static_cast<size_t>(j)] = 1;
                stack.push_back(j);
            }
        }
    }
}

}  // namespace detail

/// Strong connectivity of Q's support graph: every state reaches state 0 and
/// is reached from it (DFS both ways — exact, no spectral tolerance games).
inline bool is_irreducible(const Eigen::MatrixXd& Q) {
    if (Q.rows() == 0) return false;
    if (Q.rows() == 1) return true;
    std::vector<char> seen;
    detail::reach(Q, 0, false, seen);
    for (char s : seen)
        if (!s) return false;
    detail::reach(Q, 0, true, seen);
    for (char s : seen)
        if (!s) return false;
    return true;
}

/// Every structural violation in the model, not just the first.
inline std::vector<std::string> check_model(const RegimeModel& m) {
    std::vector<std::string> errs;
    const int n = m.n_states;
    if (n < 1) {
        errs.push_back("n_states must be >= 1");
        return errs;
    }
    if (m.Q.rows() != n || m.Q.cols() != n)
        errs.push_back("Q must be " + std::to_string(n) + "x" + std::to_string(n));
    if (m.mu.size() != n) errs.push_back("mu must have one entry per state");
    if (m.sigma.size() != n) errs.push_back("sigma must have one entry per state");
    if (!errs.empty()) return errs;

    const double qscale = std::fmax(m.Q.cwiseAbs().maxCoeff(), 1.0);
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            row += m.Q(i, j);
            if (i != j && m.Q(i, j) < 0.0)
                errs.push_back("Q(" + std::to_string(i) + "," + std::to_string(j) +
                               ") is negative off the diagonal");
        }
        if (std::fabs(row) > 1e-12 * qscale)
            errs.push_back("Q row " + std::to_string(i) +
                           " does not sum to 0 (residual " + std::to_string(row) + ")");
    }
    for (int i = 0; i < n; ++i)
        if (!(m.sigma(i) > 0.0))
            errs.push_back("sigma[" + std::to_string(i) + "] must be > 0");
    if (!(m.x0 > 0.0)) errs.push_back("x0 must be > 0");
    if (m.initial_state < 0 || m.initial_state >= n)
        errs.push_back("initial_state out of range");
    if (errs.empty() && n > 1 && !is_irreducible(m.Q))
        errs.push_back("Q is reducible (support graph not strongly connected)");
    return errs;
}

inline void validate_model(const RegimeModel& m) {
    auto errs = check_model(m);
    if (errs.empty()) return;
    for (const auto& e : errs)
        if (e.find("reducible") != std::string::npos) throw IrreducibilityError(e);
    std::string msg = "invalid model:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ModelError(msg);
}

/// Per-state quantities derived from (mu, sigma):
///   delta_i   = mu_i - sigma_i^2 / 2        (a.s. log drift in regime i)
///   lambda_i(p) = p mu_i + p(p-1) sigma_i^2 / 2   (per-regime moment exponent)
struct DerivedRates {
    Eigen::VectorXd delta;
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;

    explicit DerivedRates(const RegimeModel& m) : mu(m.mu), sigma(m.sigma) {
        delta = m.mu.array() - 0.5 * m.sigma.array().square();
    }

    Eigen::VectorXd lambda_p(double p) const {
        return p * mu.array() + 0.5 * p * (p - 1.0) * sigma.array().square();
    }
};

/// Two-state specialization with Q = [[-l0, l0], [l1, -l1]] and the chain
/// started in state 0 (the convention every two-state formula below assumes).
struct TwoStateModel {
    RegimeModel base;
    double lambda0 = 0.0;
    double lambda1 = 0.0;

    TwoStateModel(double l0, double l1, double mu0, double mu1, double sigma0,
                  double sigma1, double x0 = 1.0) {
        if (!(l0 > 0.0) || !(l1 > 0.0))
            throw ModelError("two-state switching rates must be > 0");
        lambda0 = l0;
        lambda1 = l1;
        base.n_states = 2;
        base.Q.resize(2, 2);
        base.Q << -l0, l0, l1, -l1;
        base.mu.resize(2);
        base.mu << mu0, mu1;
        base.sigma.resize(2);
        base.sigma << sigma0, sigma1;
        base.x0 = x0;
        base.initial_state = 0;
        validate_model(base);
    }

    /// Adopts a validated general model, requiring the two-state shape.
    explicit TwoStateModel(const RegimeModel& m) : base(m) {
        validate_model(base);
        if (m.n_states != 2) throw ModelError("two-state model required");
        if (m.initial_state != 0)
            throw ModelError("two-state formulas assume the chain starts in state 0");
        lambda0 = m.Q(0, 1);
        lambda1 = m.Q(1, 0);
        if (!(lambda0 > 0.0) || !(lambda1 > 0.0))
            throw ModelError("two-state switching rates must be > 0");
    }

    double delta0() const { return base.mu(0) - 0.5 * base.sigma(0) * base.sigma(0); }
    double delta1() const { return base.mu(1) - 0.5 * base.sigma(1) * base.sigma(1); }
};

/// One realized trajectory of the chain on [0, T]: jump epochs and the state
/// entered at each. Everything downstream (occupation times, conditional
/// Gaussians) is computed from these exactly — no time grid, no stepping error.
struct RegimePath {
    int initial_state = 0;
    double horizon = 0.0;
    std::vector<double> jump_times;  // strictly increasing, in (0, T]
    std::vector<int> states;         // state entered at each jump

    int n_jumps() const { return static_cast<int>(jump_times.size()); }

    int state_at(double t) const {
        int s = initial_state;
        for (size_t k = 0; k < jump_times.size() && jump_times[k] <= t; ++k) s = states[k];
        return s;
    }
};

/// Per-state time in [0, t]. For the two-state chain alpha() is the state-0
/// time and beta() the complement.
struct OccupationTimes {
    Eigen::VectorXd per_state;
    double t = 0.0;

    double alpha() const { return per_state(0); }
    double beta() const { return per_state(1); }
};

}  // namespace rsgbm
