#include <rsgbm/ctmc.hpp>

#include <catch2/catch_amalgamated.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace rsgbm;
using Catch::Approx;

namespace {

Eigen::MatrixXd two_state_Q(double l0, double l1) {
    Eigen::MatrixXd Q(2, 2);
    Q << -l0, l0, l1, -l1;
    return Q;
}

}  // namespace

TEST_CASE("stationary distribution of the two-state chain", "[ctmc]") {
    Eigen::VectorXd pi = stationary_distribution(two_state_Q(1.0, 2.0));
    REQUIRE(pi(0) == Approx(2.0 / 3.0).epsilon(1e-14));
    REQUIRE(pi(1) == Approx(1.0 / 3.0).epsilon(1e-14));
    REQUIRE(pi.sum() == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("stationary distribution matches the matrix exponential", "[ctmc]") {
    // rows of e^{Qt} converge to pi^T; t = 200 is far past the mixing time
    Eigen::MatrixXd Q(3, 3);
    Q << -1.0, 0.7, 0.3,
          0.4, -0.9, 0.5,
          1.1, 0.2, -1.3;
    Eigen::VectorXd pi = stationary_distribution(Q);
    Eigen::MatrixXd P = (Q * 200.0).exp();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            REQUIRE(P(r, c) == Approx(pi(c)).margin(1e-12));
    REQUIRE((pi.transpose() * Q).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("single state and reducible generators", "[ctmc]") {
    Eigen::MatrixXd one(1, 1);
    one << 0.0;
    REQUIRE(stationary_distribution(one)(0) == 1.0);

    Eigen::MatrixXd absorbing(2, 2);
    absorbing << 0.0, 0.0, 1.0, -1.0;  // state 0 absorbing
    REQUIRE_THROWS_AS(stationary_distribution(absorbing), IrreducibilityError);

    Eigen::MatrixXd bad_row(2, 2);
    bad_row << -1.0, 0.5, 1.0, -1.0;
    REQUIRE_THROWS_AS(stationary_distribution(bad_row), ModelError);
}

TEST_CASE("fredholm solve with the gauge pinned", "[ctmc]") {
    Eigen::MatrixXd Q = two_state_Q(1.0, 2.0);
    Eigen::VectorXd pi = stationary_distribution(Q);
    Eigen::VectorXd v(2);
    v << 1.0, -2.0;  // pi.v = 2/3 - 2/3 = 0
    Eigen::VectorXd u = fredholm_solve(Q, pi, v);
    REQUIRE(u(0) == Approx(-1.0 / 3.0).epsilon(1e-12));
    REQUIRE(u(1) == Approx(2.0 / 3.0).epsilon(1e-12));
    REQUIRE((Q * u - v).cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE(std::fabs(pi.dot(u)) < 1e-13);

    Eigen::VectorXd bad(2);
    bad << 1.0, 1.0;  // pi-mean 1, not solvable
    REQUIRE_THROWS_AS(fredholm_solve(Q, pi, bad), SolvabilityError);
}

TEST_CASE("sampled paths hold exponentially and alternate", "[ctmc]") {
    TwoStateModel two(1.0, 2.0, 0.0, 0.0, 1.0, 1.0);
    PhiloxStream stream(99, 0);
    const int n = 20000;
    double first_jump_sum = 0.0;
    int with_jump = 0;
    for (int i = 0; i < n; ++i) {
        RegimePath p = sample_path(two.base, 3.0, stream);
        int expect = 0;
        for (size_t k = 0; k < p.states.size(); ++k) {
            expect ^= 1;
            REQUIRE(p.states[k] == expect);
            if (k > 0) REQUIRE(p.jump_times[k] > p.jump_times[k - 1]);
        }
        if (p.n_jumps() > 0) {
            first_jump_sum += p.jump_times[0];
            ++with_jump;
        }
    }
    // E[first jump | jump <= 3] for Exp(1) truncated at 3
    const double e3 = std::exp(-3.0);
    const double expect = (1.0 - 4.0 * e3) / (1.0 - e3);
    REQUIRE(first_jump_sum / with_jump == Approx(expect).epsilon(0.02));
}

TEST_CASE("occupation times sum back to t", "[ctmc]") {
    TwoStateModel two(1.3, 0.8, 0.0, 0.0, 1.0, 1.0);
    PhiloxStream stream(7, 3);
    for (int i = 0; i < 200; ++i) {
        RegimePath p = sample_path(two.base, 2.5, stream);
        for (double t : {0.3, 1.1, 2.5}) {
            OccupationTimes occ = occupation_times(p, t);
            // one rounding of the final sum is all the slack there is
            REQUIRE(occ.alpha() + occ.beta() == Approx(t).margin(1e-15));
            REQUIRE(occ.alpha() >= 0.0);
            REQUIRE(occ.beta() >= 0.0);
        }
    }
    RegimePath p = sample_path(two.base, 2.5, stream);
    REQUIRE_THROWS_AS(occupation_times(p, 3.0), DomainError);
}

TEST_CASE("sojourn density: atom, positivity, normalization", "[ctmc]") {
    TwoStateModel two(1.0, 2.0, 0.0, 0.0, 1.0, 1.0);
    const double t = 1.3;
    SojournDensity d = sojourn_density(two, t, 0.7);
    REQUIRE(d.atom == Approx(std::exp(-1.0 * t)).epsilon(1e-15));
    REQUIRE(d.density > 0.0);

    const double mass =
        adaptive_gl([&](double s) { return sojourn_density(two, t, s).density; }, 0.0, t,
                    QuadConfig{}).value;
    REQUIRE(mass + d.atom == Approx(1.0).margin(1e-10));
}

TEST_CASE("sojourn density survives large rate-time products", "[ctmc]") {
    TwoStateModel two(10.0, 10.0, 0.0, 0.0, 1.0, 1.0);
    const double t = 10.0;  // lambda*t = 100: naive Bessel terms would overflow
    const double mass =
        adaptive_gl([&](double s) { return sojourn_density(two, t, s).density; }, 0.0, t,
                    QuadConfig{}).value;
    REQUIRE(mass == Approx(-std::expm1(-10.0 * t)).margin(1e-8));
}

TEST_CASE("sojourn cdf is monotone and reaches the continuous mass", "[ctmc]") {
    TwoStateModel two(0.7, 1.4, 0.0, 0.0, 1.0, 1.0);
    const double t = 2.0;
    double prev = 0.0;
    for (double s : {0.2, 0.6, 1.0, 1.4, 1.8}) {
        const double c = sojourn_cdf(two, t, s);
        REQUIRE(c >= prev);
        prev = c;
    }
    REQUIRE(sojourn_cdf(two, t, 2.0) == 1.0);
    REQUIRE(sojourn_cdf(two, t, -0.1) == 0.0);
}
