#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "tse/priors.hpp"
#include "tse/rng.hpp"

using namespace tse;

namespace {

// independent oracle for the class-1 normalization
double phi(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("class-2 density values") {
    PriorSpec spec = PriorSpec::class2(1.0, 61.0);
    // denominator u_max + 20 - 2 u_min = 79
    CHECK(prior_pdf(spec, 1.0) == Catch::Approx(2.0 / 79.0));
    CHECK(prior_pdf(spec, 20.0) == Catch::Approx(2.0 / 79.0));
    CHECK(prior_pdf(spec, 40.5) == Catch::Approx(1.0 / 79.0));  // 2*(61-40.5)/((61-20)*79)
    CHECK(prior_pdf(spec, 61.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(prior_pdf(spec, 0.5) == 0.0);
    CHECK(prior_pdf(spec, 62.0) == 0.0);
}

TEST_CASE("class-2 density is non-increasing") {
    PriorSpec spec = PriorSpec::class2(1.0, 87.0);
    double prev = prior_pdf(spec, 1.0);
    for (double u = 1.5; u <= 87.0; u += 0.5) {
        double f = prior_pdf(spec, u);
        CHECK(f <= prev + 1e-15);
        CHECK(f >= 0.0);
        prev = f;
    }
}

TEST_CASE("class-2 branch masses sum to one in closed form") {
    Rng rng(2024);
    for (int k = 0; k < 100; ++k) {
        double u_min = 0.5 + 18.0 * rng.u01();
        double u_max = 20.5 + 100.0 * rng.u01();
        double denom = u_max + 20.0 - 2.0 * u_min;
        double mass_below = (20.0 - u_min) * 2.0 / denom;
        double mass_above = (u_max - 20.0) / denom;
        REQUIRE(mass_below + mass_above == Catch::Approx(1.0).epsilon(1e-12));
        // and the quadrature agrees
        double total = quadrature(PriorSpec::class2(u_min, u_max), [](double) { return 1.0; });
        REQUIRE(total == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("degenerate class-2 support collapses to uniform") {
    PriorSpec spec = PriorSpec::class2(1.0, 15.0);  // entirely below the break
    CHECK(prior_pdf(spec, 5.0) == Catch::Approx(1.0 / 14.0));
    CHECK(quadrature(spec, [](double) { return 1.0; }) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("class-1 truncated normal") {
    PriorSpec spec = PriorSpec::class1(15.0, 10.0, 1.0, 40.0);
    double z = phi(2.5) - phi(-1.4);
    CHECK(z == Catch::Approx(0.913034).margin(1e-6));
    // frozen from the erf oracle: 0.0398942/Z
    CHECK(prior_pdf(spec, 15.0) == Catch::Approx(0.0436941474).margin(1e-9));
    CHECK(prior_pdf(spec, 15.0) == Catch::Approx(0.0398942280 / z).margin(1e-12));
    CHECK(prior_pdf(spec, 0.0) == 0.0);
    CHECK(prior_pdf(spec, 41.0) == 0.0);
}

TEST_CASE("class-1 normalizes and peaks at the clamped counter value") {
    Rng rng(555);
    for (int k = 0; k < 60; ++k) {
        double u_min = 1.0 + 10.0 * rng.u01();
        double u_max = u_min + 5.0 + 80.0 * rng.u01();
        // keep v_tc within 3 sigma of the support so the truncated form applies
        // (further out the documented uniform fallback takes over)
        double v_tc = (u_min - 30.0) + (u_max - u_min + 60.0) * rng.u01();
        PriorSpec spec = PriorSpec::class1(v_tc, 10.0, u_min, u_max);

        double total = quadrature(spec, [](double) { return 1.0; });
        REQUIRE(total == Catch::Approx(1.0).margin(1e-6));

        double expect_peak = std::clamp(v_tc, u_min, u_max);
        double best_u = u_min, best_f = -1.0;
        for (int i = 0; i <= 2000; ++i) {
            double u = u_min + (u_max - u_min) * i / 2000.0;
            double f = prior_pdf(spec, u);
            REQUIRE(f >= 0.0);
            if (f > best_f) {
                best_f = f;
                best_u = u;
            }
        }
        REQUIRE(best_u == Catch::Approx(expect_peak).margin((u_max - u_min) / 1000.0));
    }
}

TEST_CASE("counter far outside the bounds falls back to uniform") {
    PriorSpec spec = PriorSpec::class1(500.0, 10.0, 1.0, 30.0);  // Z underflows
    PriorQuadrature quad = make_quadrature(spec);
    CHECK(quad.uniform_fallback);
    CHECK(prior_pdf(spec, 10.0) == Catch::Approx(1.0 / 29.0));
    CHECK(quad.integrate([](double) { return 1.0; }) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("quadrature matches the closed-form class-2 moments") {
    PriorSpec spec = PriorSpec::class2(1.0, 61.0);

    SECTION("unit integrand") {
        CHECK(quadrature(spec, [](double) { return 1.0; }) == Catch::Approx(1.0).margin(1e-6));
    }
    SECTION("first moment") {
        // closed form: uniform branch (2/79)(20^2-1^2)/2 = 399/79 = 5.050633;
        // linear branch mass 41/79 times triangular mean 20 + 41/3 = 17.472574
        double mean = quadrature(spec, [](double u) { return u; });
        CHECK(mean == Catch::Approx(22.5232067511).margin(1e-6));
    }
    SECTION("mass below the break") {
        double below = quadrature(spec, [](double u) { return u <= 20.0 ? 1.0 : 0.0; });
        CHECK(below == Catch::Approx(38.0 / 79.0).margin(5e-3));  // discontinuous integrand
    }
}

TEST_CASE("quadrature reaches 1e-6 accuracy on smooth integrands") {
    // class-1 normalization against the erf oracle
    for (double v_tc : {5.0, 15.0, 35.0}) {
        PriorSpec spec = PriorSpec::class1(v_tc, 10.0, 1.0, 40.0);
        double total = quadrature(spec, [](double) { return 1.0; });
        REQUIRE(std::abs(total - 1.0) <= 1e-6);
    }
    // class-2 second moment has a closed form per branch
    PriorSpec c2 = PriorSpec::class2(1.0, 61.0);
    double m2 = quadrature(c2, [](double u) { return u * u; });
    double umin = 1.0, umax = 61.0, denom = umax + 20.0 - 2.0 * umin;
    double branch1 = 2.0 / denom * (20.0 * 20.0 * 20.0 - 1.0) / 3.0;
    double c = 2.0 / ((umax - 20.0) * denom);
    double branch2 = c * (umax * (umax * umax * umax - 8000.0) / 3.0 -
                          (umax * umax * umax * umax - 160000.0) / 4.0);
    REQUIRE(m2 == Catch::Approx(branch1 + branch2).margin(1e-6));
}

TEST_CASE("invalid prior bounds are rejected") {
    CHECK_THROWS_AS(prior_pdf(PriorSpec::class2(30.0, 25.0), 27.0), ValidationError);
    CHECK_THROWS_AS(prior_pdf(PriorSpec::class2(25.0, 40.0), 30.0), ValidationError);
    CHECK_THROWS_AS(make_quadrature(PriorSpec::class1(10.0, 0.0, 1.0, 40.0)), ValidationError);
}
