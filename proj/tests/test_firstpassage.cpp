#include <rsgbm/ctmc.hpp>
#include <rsgbm/firstpassage.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>

using namespace rsgbm;
using Catch::Approx;

namespace {

// sigma0 = sigma1 = 0.3, Delta = (-0.1, 0.1): mu_i = Delta_i + sigma_i^2/2
TwoStateModel sandwich_model(double l0, double l1) {
    return TwoStateModel(l0, l1, -0.055, 0.145, 0.3, 0.3);
}

}  // namespace

TEST_CASE("normal helpers", "[firstpassage]") {
    REQUIRE(phi(0.0) == Approx(0.5).margin(1e-16));
    REQUIRE(phi(1.0) == Approx(0.8413447460685429).margin(1e-15));
    REQUIRE(std::exp(log_phi(-1.0)) == Approx(phi(-1.0)).epsilon(1e-13));
    // asymptotic branch: finite, monotone, and consistent at the switch
    REQUIRE(std::isfinite(log_phi(-40.0)));
    REQUIRE(log_phi(-40.0) < log_phi(-39.0));
    REQUIRE(log_phi(-37.0 - 1e-9) == Approx(log_phi(-37.0 + 1e-9)).epsilon(1e-9));
    REQUIRE(inv_phi(phi(1.7)) == Approx(1.7).margin(1e-12));
}

TEST_CASE("bm_no_cross: driftless reflection and limits", "[firstpassage]") {
    // P(min BM > -a) = 2 Phi(a / (sigma sqrt(T))) - 1 when drift = 0
    for (double a : {0.5, 1.0, 2.0})
        REQUIRE(bm_no_cross(a, 0.0, 1.0, 1.0) ==
                Approx(2.0 * phi(a) - 1.0).margin(1e-14));
    // far barrier: probability -> 1; immediate barrier: -> 0
    REQUIRE(bm_no_cross(30.0, 0.05, 0.3, 1.0) == Approx(1.0).margin(1e-12));
    REQUIRE(bm_no_cross(1e-8, 0.05, 0.3, 1.0) == Approx(0.0).margin(1e-6));
    // monotone in the barrier distance
    REQUIRE(bm_no_cross(1.0, 0.05, 0.3, 1.0) > bm_no_cross(0.5, 0.05, 0.3, 1.0));
    REQUIRE_THROWS_AS(bm_no_cross(-1.0, 0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("bridge_no_cross", "[firstpassage]") {
    REQUIRE(bridge_no_cross(1.0, 1.0, 0.0, 1.0, 1.0) ==
            Approx(-std::expm1(-2.0)).margin(1e-15));
    REQUIRE(bridge_no_cross(0.0, 1.0, 0.0, 1.0, 1.0) == 0.0);
    REQUIRE(bridge_no_cross(1.0, -0.2, 0.0, 1.0, 1.0) == 0.0);
    // barrier shift invariance
    REQUIRE(bridge_no_cross(1.5, 0.7, 0.5, 0.8, 0.3) ==
            Approx(bridge_no_cross(1.0, 0.2, 0.0, 0.8, 0.3)).margin(1e-15));
    REQUIRE_THROWS_AS(bridge_no_cross(1.0, 1.0, 0.0, 0.0, 1.0), DomainError);
}

TEST_CASE("query construction and validation", "[firstpassage]") {
    TwoStateModel two = sandwich_model(1.0, 1.0);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    REQUIRE(q.a_tilde == Approx(1.0).margin(1e-15));
    REQUIRE_NOTHROW(validate_query(q));
    REQUIRE_THROWS_AS(make_query(two, 1.0, 1.5, 1.0), DomainError);   // a >= x
    REQUIRE_THROWS_AS(make_query(two, 1.0, 0.0, 1.0), DomainError);   // a = 0
    REQUIRE_THROWS_AS(make_query(two, 1.0, 0.5, 0.0), DomainError);   // T = 0
    q.a_tilde = 2.0;  // inconsistent with ln(x/a)
    REQUIRE_THROWS_AS(validate_query(q), DomainError);
}

TEST_CASE("envelopes bracket the occupation boundary pathwise", "[firstpassage]") {
    TwoStateModel two = sandwich_model(1.0, 2.0);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    PhiloxStream stream(31, 5);
    for (int i = 0; i < 100; ++i) {
        RegimePath path = sample_path(two.base, q.T, stream);
        OccupationTimes occ_T = occupation_times(path, q.T);
        BarrierEnvelope env = make_envelope(q, occ_T.alpha());
        REQUIRE(env.g_u(0.0) == Approx(q.a_tilde).margin(1e-15));
        REQUIRE(env.g_l(0.0) == Approx(q.a_tilde).margin(1e-15));
        REQUIRE(env.g_u(q.T) == Approx(env.g(occ_T)).margin(1e-12));
        REQUIRE(env.g_l(q.T) == Approx(env.g(occ_T)).margin(1e-12));
        for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double t = frac * q.T;
            const double g = env.g(occupation_times(path, t));
            REQUIRE(env.g_l(t) <= g + 1e-12);
            REQUIRE(g <= env.g_u(t) + 1e-12);
        }
    }
    REQUIRE_THROWS_AS(make_envelope(q, q.T + 0.1), DomainError);
}

TEST_CASE("F_u and F_l are probabilities on (0, T)", "[firstpassage]") {
    TwoStateModel two = sandwich_model(1.0, 1.0);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    for (double t : {0.05, 0.3, 0.5, 0.8, 0.97}) {
        const double fu = F_u(t, q);
        const double fl = F_l(t, q);
        REQUIRE(fu >= 0.0);
        REQUIRE(fu <= 1.0 + 1e-12);
        REQUIRE(fl >= 0.0);
        REQUIRE(fl <= 1.0 + 1e-12);
    }
    REQUIRE_THROWS_AS(F_u(0.0, q), DomainError);
    REQUIRE_THROWS_AS(F_u(q.T, q), DomainError);
    REQUIRE_THROWS_AS(F_l(-0.1, q), DomainError);
}

TEST_CASE("bounds: ordering, range, and the no-switch term", "[firstpassage]") {
    TwoStateModel two = sandwich_model(1.0, 1.0);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    BoundsResult b = bounds(q);
    REQUIRE(b.lower <= b.upper + 1e-12);
    REQUIRE(b.lower >= 0.0);
    REQUIRE(b.upper <= 1.0);
    REQUIRE(b.no_switch_term ==
            Approx(bm_no_cross(1.0, two.delta0(), 0.3, 1.0) * std::exp(-1.0)).margin(1e-14));
    // both bounds dominate the never-switch contribution
    REQUIRE(b.lower >= b.no_switch_term - 1e-12);
    REQUIRE(b.variant == CoefficientVariant::DensityConsistent);
    REQUIRE(b.terms_used > 0);
    REQUIRE(b.truncation_bound < 1e-8);
}

TEST_CASE("bounds decrease with the horizon", "[firstpassage]") {
    TwoStateModel two = sandwich_model(1.0, 1.0);
    double prev_lo = 1.0, prev_up = 1.0;
    for (double T : {0.5, 1.0, 2.0}) {
        FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), T);
        BoundsResult b = bounds(q);
        REQUIRE(b.upper <= prev_up + 1e-5);
        REQUIRE(b.lower <= prev_lo + 1e-5);
        prev_lo = b.lower;
        prev_up = b.upper;
    }
}

TEST_CASE("bounds degenerate to Brownian motion as lambda0 -> 0", "[firstpassage]") {
    TwoStateModel two(1e-8, 1.0, -0.055, 0.145, 0.3, 0.3);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    BoundsResult b = bounds(q);
    const double ref = bm_no_cross(q.a_tilde, two.delta0(), 0.3, 1.0);
    REQUIRE(b.lower == Approx(ref).margin(1e-6));
    REQUIRE(b.upper == Approx(ref).margin(1e-6));
}

TEST_CASE("bounds preconditions", "[firstpassage]") {
    // unequal volatilities
    TwoStateModel uneq(1.0, 1.0, -0.055, 0.145, 0.3, 0.2);
    REQUIRE_THROWS_AS(bounds(make_query(uneq, 1.0, 0.5, 1.0)), DomainError);
    // Delta0 > Delta1: regimes must be relabeled by the caller
    TwoStateModel swapped(1.0, 1.0, 0.145, -0.055, 0.3, 0.3);
    REQUIRE_THROWS_AS(bounds(make_query(swapped, 1.0, 0.5, 1.0)), DomainError);
}

TEST_CASE("slepian estimator: preconditions and determinism", "[firstpassage][mc]") {
    TwoStateModel two(1.0, 1.0, -0.1 + 0.08, 0.1 + 0.02, 0.4, 0.2);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    // sigma1 > sigma0 is outside the comparison's hypothesis
    TwoStateModel flipped(1.0, 1.0, -0.1 + 0.02, 0.1 + 0.08, 0.2, 0.4);
    REQUIRE_THROWS_AS(slepian_upper(make_query(flipped, 1.0, 0.5, 1.0), MCConfig{1000, 1, 16, 0.99}),
                      DomainError);

    MCConfig mc{2000, 77, 64, 0.99};
    setenv("RSGBM_THREADS", "1", 1);
    MCEstimate one = slepian_upper(q, mc);
    setenv("RSGBM_THREADS", "7", 1);
    MCEstimate many = slepian_upper(q, mc);
    unsetenv("RSGBM_THREADS");
    REQUIRE(one.value == many.value);          // bitwise: chunked reduction
    REQUIRE(one.std_error == many.std_error);
    REQUIRE(one.value >= 0.0);
    REQUIRE(one.value <= 1.0);
    REQUIRE(one.ci_low <= one.value);
    REQUIRE(one.ci_high >= one.value);
}

TEST_CASE("slepian modes agree within noise where they should", "[firstpassage][mc]") {
    TwoStateModel two(1.0, 1.0, -0.1 + 0.08, 0.1 + 0.02, 0.4, 0.2);
    FirstPassageQuery q = make_query(two, 1.0, std::exp(-1.0), 1.0);
    // Eta0Zero discretizes what Eta0ZeroExact integrates exactly: same target
    MCEstimate grid = slepian_upper(q, MCConfig{20000, 5, 1024, 0.99}, SlepianMode::Eta0Zero);
    MCEstimate exact = slepian_upper(q, MCConfig{20000, 6, 1024, 0.99}, SlepianMode::Eta0ZeroExact);
    const double joint = std::sqrt(grid.std_error * grid.std_error +
                                   exact.std_error * exact.std_error);
    REQUIRE(std::fabs(grid.value - exact.value) <= 4.0 * joint + 5e-3);
    // the grid mode reports its own discretization bias, the exact mode has none
    REQUIRE(exact.bias_estimate == 0.0);
    REQUIRE(std::fabs(grid.bias_estimate) < 0.05);
}
