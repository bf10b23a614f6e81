#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "rsgbm/errors.hpp"
#include "rsgbm/series.hpp"

namespace rsgbm {

struct GLRule {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;
};

/// Gauss-Legendre rule of order n, cached. Roots of P_n by Newton iteration
/// from the Chebyshev initial guess; weights 2 / ((1-x^2) P_n'(x)^2).
inline const GLRule& gl_rule(int n) {
    static std::map<int, GLRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GLRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

template <class F>
double fixed_gl(F&& f, double a, double b, int n) {
    const GLRule& r = gl_rule(n);
    const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
    CompensatedSum s;
    for (int i = 0; i < n; ++i) s.add(r.weights[i] * f(mid + hw * r.nodes[i]));
    return hw * s.value();
}

struct QuadConfig {
    double rel_tol = 1e-12;
    double abs_tol = 0.0;
    int max_depth = 40;
    int panel_order = 15;
};

struct QuadResult {
    double value;
    double error_estimate;
    long evals;
};

namespace detail {

template <class F>
void adapt_panel(F& f, double a, double b, double whole, double eps, int depth,
                 const QuadConfig& cfg, CompensatedSum& value, CompensatedSum& err,
                 long& evals) {
    const double m = 0.5 * (a + b);
    const double left = fixed_gl(f, a, m, cfg.panel_order);
    const double right = fixed_gl(f, m, b, cfg.panel_order);
    evals += 2 * cfg.panel_order;
    const double diff = std::fabs(left + right - whole);
    if (!std::isfinite(diff)) throw NumericalError("quadrature: integrand not finite");
    if (diff <= eps || depth >= cfg.max_depth) {
        value.add(left);
        value.add(right);
        err.add(diff);
        return;
    }
    adapt_panel(f, a, m, left, 0.5 * eps, depth + 1, cfg, value, err, evals);
    adapt_panel(f, m, b, right, 0.5 * eps, depth + 1, cfg, value, err, evals);
}

}  // namespace detail

/// Adaptive Gauss-Legendre by panel bisection: a panel is accepted when its
/// value agrees with the sum over its halves within the locally apportioned
/// tolerance. Error estimate is the sum of accepted-panel discrepancies.
template <class F>
QuadResult adaptive_gl(F&& f, double a, double b, const QuadConfig& cfg = {}) {
    if (!(b > a)) return {0.0, 0.0, 0};
    const double rough = fixed_gl(f, a, b, cfg.panel_order);
    if (!std::isfinite(rough)) throw NumericalError("quadrature: integrand not finite");
    const double eps = std::fmax(cfg.abs_tol, cfg.rel_tol * std::fmax(std::fabs(rough), 1e-300));
    CompensatedSum value, err;
    long evals = cfg.panel_order;
    detail::adapt_panel(f, a, b, rough, eps, 0, cfg, value, err, evals);
    return {value.value(), err.value(), evals};
}

}  // namespace rsgbm
