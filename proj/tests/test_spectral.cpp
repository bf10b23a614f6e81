#include <rsgbm/spectral.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace rsgbm;
using Catch::Approx;

namespace {

const TwoStateModel kDown(1.0, 1.0, 0.1, -0.1, 0.2, 0.2);  // pi-mean drift -0.02

}  // namespace

TEST_CASE("A_p assembles Q plus the diagonal moment rates", "[spectral]") {
    Eigen::MatrixXd A = build_Ap(kDown.base, 1.0);
    // lambda_i(1) = mu_i
    REQUIRE(A(0, 0) == Approx(-1.0 + 0.1).epsilon(1e-15));
    REQUIRE(A(0, 1) == 1.0);
    REQUIRE(A(1, 0) == 1.0);
    REQUIRE(A(1, 1) == Approx(-1.0 - 0.1).epsilon(1e-15));
    REQUIRE_THROWS_AS(build_Ap(kDown.base, -0.5), DomainError);
}

TEST_CASE("eta_0 vanishes and eta_1 hits the closed value", "[spectral]") {
    REQUIRE(std::fabs(eta_p(kDown.base, 0.0)) < 1e-12);
    // A_1 = [[-0.9, 1], [1, -1.1]]: max eigenvalue sqrt(1.01) - 1
    const double closed = 1.0 - std::sqrt(1.01);
    REQUIRE(eta_p(kDown.base, 1.0) == Approx(closed).margin(1e-13));
    REQUIRE(closed == Approx(-0.004987562112089).margin(1e-15));

    SpectralReport rep = spectral_report(kDown.base, 1.0);
    REQUIRE(rep.growth_rate == -rep.eta_p);
    REQUIRE(rep.eigenvalues.size() == 2);
}

TEST_CASE("single-regime eta_p is the scalar rate", "[spectral]") {
    RegimeModel m;
    m.n_states = 1;
    m.Q = Eigen::MatrixXd::Zero(1, 1);
    m.mu = Eigen::VectorXd::Constant(1, 0.07);
    m.sigma = Eigen::VectorXd::Constant(1, 0.3);
    for (double p : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const double lam = p * 0.07 + 0.5 * p * (p - 1.0) * 0.09;
        REQUIRE(eta_p(m, p) == Approx(-lam).margin(1e-15));
    }
}

TEST_CASE("the lyapunov curve is convex on a uniform grid", "[spectral]") {
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.1 * i);
    LyapunovCurve curve = lyapunov_curve(kDown.base, grid);
    REQUIRE(curve.points.size() == grid.size());
    REQUIRE(curve.convex);
    REQUIRE(curve.min_second_difference >= -1e-8);
    REQUIRE(curve.points.front().growth_rate == Approx(0.0).margin(1e-12));
}

TEST_CASE("almost-sure growth is the pi-weighted log drift", "[spectral]") {
    // pi = (1/2, 1/2), Delta = (0.08, -0.12)
    REQUIRE(almost_sure_growth(kDown.base) == Approx(-0.02).margin(1e-15));

    TwoStateModel skew(1.0, 2.0, 0.1, -0.1, 0.2, 0.2);  // pi = (2/3, 1/3)
    REQUIRE(almost_sure_growth(skew.base) ==
            Approx((2.0 * 0.08 - 0.12) / 3.0).margin(1e-15));
}

TEST_CASE("classification trichotomy on the hand cases", "[spectral]") {
    const Classification down = classify(kDown.base);
    REQUIRE(down.recurrence_class == RecurrenceClass::TRANSIENT);
    REQUIRE(down.as_limit == AsLimit::TO_ZERO);
    REQUIRE(std::fabs(down.mean_drift + 0.02) <= 1e-15);
    REQUIRE(down.tolerance_used > 0.0);

    RegimeModel nullrec = kDown.base;
    nullrec.mu(0) = 0.5 * nullrec.sigma(0) * nullrec.sigma(0);
    nullrec.mu(1) = 0.5 * nullrec.sigma(1) * nullrec.sigma(1);
    const Classification cn = classify(nullrec);
    REQUIRE(cn.recurrence_class == RecurrenceClass::NULL_RECURRENT);
    REQUIRE(cn.as_limit == AsLimit::NO_LIMIT_CLAIMED);

    TwoStateModel up(1.0, 1.0, 0.14, -0.06, 0.2, 0.2);
    const Classification cu = classify(up.base);
    REQUIRE(cu.recurrence_class == RecurrenceClass::TRANSIENT);
    REQUIRE(cu.as_limit == AsLimit::TO_INFINITY);
    REQUIRE(std::fabs(cu.mean_drift - 0.02) <= 1e-15);
}

TEST_CASE("classification respects an explicit tolerance", "[spectral]") {
    // |drift| = 0.02 sits inside a 0.05 dead-band
    const Classification c = classify(kDown.base, 0.05);
    REQUIRE(c.recurrence_class == RecurrenceClass::NULL_RECURRENT);
    REQUIRE(c.tolerance_used == 0.05);
}

TEST_CASE("string names for the trichotomy", "[spectral]") {
    REQUIRE(std::string(to_string(RecurrenceClass::TRANSIENT)) == "TRANSIENT");
    REQUIRE(std::string(to_string(RecurrenceClass::NULL_RECURRENT)) == "NULL_RECURRENT");
    REQUIRE(std::string(to_string(AsLimit::TO_INFINITY)) == "TO_INFINITY");
    REQUIRE(std::string(to_string(AsLimit::TO_ZERO)) == "TO_ZERO");
    REQUIRE(std::string(to_string(AsLimit::NO_LIMIT_CLAIMED)) == "NO_LIMIT_CLAIMED");
}
