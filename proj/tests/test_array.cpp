#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nfdoa/array.hpp"

using namespace nfdoa;

namespace {
constexpr double kDeg = M_PI / 180.0;
}

TEST_CASE("rayleigh distance") {
    CHECK(rayleigh_distance(32.0, 1.0) == doctest::Approx(2048.0));
    CHECK(rayleigh_distance(1.0, 1.0) == doctest::Approx(2.0));
    CHECK(rayleigh_distance(10.0, 1.0) == doctest::Approx(200.0));
    CHECK_THROWS_AS(rayleigh_distance(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(rayleigh_distance(1.0, -2.0), std::domain_error);
}

TEST_CASE("fresnel bounds") {
    auto [lo65, hi65] = fresnel_bounds(ArrayConfig::ula(65));
    CHECK(lo65 == doctest::Approx(112.0).epsilon(0.01)); // 0.62*sqrt(32^3) = 112.18
    CHECK(hi65 == doctest::Approx(2048.0));

    ArrayConfig tiny = ArrayConfig::ula(3, 0.5); // D = 1 lambda
    auto [lo3, hi3] = fresnel_bounds(tiny);
    CHECK(lo3 == doctest::Approx(0.62));
    CHECK(hi3 == doctest::Approx(2.0));

    auto [lo129, hi129] = fresnel_bounds(ArrayConfig::ula(129));
    CHECK(lo129 == doctest::Approx(0.62 * 512.0)); // 317.44
    CHECK(hi129 == doctest::Approx(8192.0));
    CHECK(lo129 < hi129);
}

TEST_CASE("array config validation") {
    CHECK_THROWS_AS(ArrayConfig::ula(1).validate(), std::domain_error);
    ArrayConfig bad = ArrayConfig::ula(65);
    bad.spacing = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad = ArrayConfig::ula(65);
    bad.ref_index = 1;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    CHECK(ArrayConfig::center_index(65) == 33);
    CHECK(ArrayConfig::center_index(64) == 32); // even N convention
}

TEST_CASE("exact range") {
    ArrayConfig cfg = ArrayConfig::ula(65);
    SourcePlacement src{30.0 * kDeg, 200.0};

    // law of cosines by hand: sqrt(40000 + 256 - 3200) = 192.4993...
    CHECK(exact_range(src, cfg, cfg.ref_index + 32) == doctest::Approx(std::sqrt(37056.0)));
    CHECK(exact_range(src, cfg, cfg.ref_index) == doctest::Approx(200.0));

    SourcePlacement broadside{0.0, 150.0};
    for (int n : {1, 20, 65}) {
        double dd = cfg.delta(n) * cfg.spacing;
        CHECK(exact_range(broadside, cfg, n) ==
              doctest::Approx(std::sqrt(150.0 * 150.0 + dd * dd)));
    }
}

TEST_CASE("near-field steering") {
    ArrayConfig cfg = ArrayConfig::ula(65);

    SUBCASE("reference element is exactly one") {
        for (double theta : {-1.2, 0.0, 0.7}) {
            CVector a = near_field_steering({theta, 300.0}, cfg);
            CHECK(a[cfg.ref_index - 1] == cd{1.0, 0.0});
        }
    }

    SUBCASE("amplitude matches r / r_n") {
        SourcePlacement src{30.0 * kDeg, 200.0};
        CVector a = near_field_steering(src, cfg);
        for (int n = 1; n <= cfg.n_elements; ++n)
            CHECK(std::abs(a[n - 1]) ==
                  doctest::Approx(src.range / exact_range(src, cfg, n)).epsilon(1e-12));
        // hand value at delta = 32: 1/sqrt(1 + 0.0064 - 0.08) = 1.03896
        CHECK(std::abs(a[cfg.ref_index + 32 - 1]) == doctest::Approx(1.0 / 0.96250).epsilon(1e-4));
    }

    SUBCASE("far limit converges to the plane-wave profile") {
        double theta = 17.0 * kDeg;
        CVector nf = near_field_steering({theta, 1e9}, cfg);
        CVector ff = far_field_steering(theta, cfg);
        // re-reference the far-field vector to the center element
        cd ref = ff[cfg.ref_index - 1];
        for (int n = 0; n < cfg.n_elements; ++n) {
            cd expected = ff[n] / ref;
            CHECK(std::abs(nf[n] - expected) < 1e-6);
        }
    }

    SUBCASE("very far phases agree within 1e-5 rad per element") {
        double theta = -41.0 * kDeg;
        double r = 1e6 * 2.0 * cfg.aperture() * cfg.aperture(); // far above the zone
        CVector nf = near_field_steering({theta, r}, cfg);
        CVector ff = far_field_steering(theta, cfg);
        cd ref = ff[cfg.ref_index - 1];
        for (int n = 0; n < cfg.n_elements; ++n) {
            double want = std::arg(ff[n] / ref);
            double got = std::arg(nf[n]);
            double diff = std::remainder(got - want, 2.0 * M_PI);
            CHECK(std::abs(diff) < 1e-5);
        }
    }
}

TEST_CASE("fresnel steering") {
    ArrayConfig cfg = ArrayConfig::ula(65);

    SUBCASE("agrees exactly with the spherical model at the reference element") {
        CVector a = fresnel_steering({0.35, 250.0}, cfg);
        CHECK(a[cfg.ref_index - 1] == cd{1.0, 0.0});
    }

    SUBCASE("phase truncation error follows the cubic term and decays as 1/r^2") {
        auto worst_phase_diff = [&cfg](double theta, double r) {
            SourcePlacement src{theta, r};
            CVector approx = fresnel_steering(src, cfg);
            CVector exact = near_field_steering(src, cfg);
            double worst = 0.0;
            for (int n = 0; n < cfg.n_elements; ++n) {
                double diff = std::remainder(std::arg(approx[n]) - std::arg(exact[n]), 2.0 * M_PI);
                worst = std::max(worst, std::abs(diff));
            }
            return worst;
        };
        // leading truncation term: 2*pi * delta^3 d^3 sin(t) cos^2(t) / (2 r^2)
        auto cubic_bound = [&cfg](double theta, double r) {
            double dmax = (cfg.n_elements - 1) / 2.0 * cfg.spacing;
            return 2.0 * M_PI * dmax * dmax * dmax * std::abs(std::sin(theta)) *
                   std::cos(theta) * std::cos(theta) / (2.0 * r * r);
        };
        double w30 = worst_phase_diff(30.0 * kDeg, 200.0);
        CHECK(w30 == doctest::Approx(cubic_bound(30.0 * kDeg, 200.0)).epsilon(0.05));
        CHECK(w30 < 0.13);
        // near broadside the error is small even at the zone's inner edge
        CHECK(worst_phase_diff(5.0 * kDeg, 200.0) < 0.05);
        // quadrupling the range divides the cubic term by sixteen
        double ratio = w30 / worst_phase_diff(30.0 * kDeg, 800.0);
        CHECK(ratio == doctest::Approx(16.0).epsilon(0.1));
    }

    SUBCASE("broadside phase is -delta^2 * pi d^2 / r") {
        double r = 400.0;
        CVector a = fresnel_steering({0.0, r}, cfg);
        for (int n = 1; n <= cfg.n_elements; n += 16) {
            double delta = cfg.delta(n);
            double want = -delta * delta * M_PI * cfg.spacing * cfg.spacing / r;
            CHECK(std::remainder(std::arg(a[n - 1]) - want, 2.0 * M_PI) ==
                  doctest::Approx(0.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("far-field steering") {
    ArrayConfig cfg4 = ArrayConfig::ula(4);

    SUBCASE("broadside gives all ones") {
        CVector a = far_field_steering(0.0, cfg4);
        for (const cd& z : a) CHECK(std::abs(z - cd{1.0, 0.0}) < 1e-15);
    }

    SUBCASE("30 degrees gives quarter-turn phase steps") {
        CVector a = far_field_steering(30.0 * kDeg, cfg4);
        for (int n = 0; n < 4; ++n)
            CHECK(std::remainder(std::arg(a[n]) - n * M_PI_2, 2.0 * M_PI) ==
                  doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("endfire limit alternates sign") {
        CVector a = far_field_steering(std::nextafter(M_PI_2, 0.0), cfg4);
        for (int n = 0; n < 4; ++n)
            CHECK(a[n].real() == doctest::Approx(n % 2 == 0 ? 1.0 : -1.0).epsilon(1e-6));
    }

    SUBCASE("negative angle conjugates") {
        ArrayConfig cfg = ArrayConfig::ula(9);
        CVector pos = far_field_steering(0.6, cfg);
        CVector neg = far_field_steering(-0.6, cfg);
        for (int n = 0; n < 9; ++n) CHECK(std::abs(neg[n] - std::conj(pos[n])) < 1e-14);
    }
}

TEST_CASE("fresnel parameters") {
    ArrayConfig cfg = ArrayConfig::ula(65);

    FresnelParams fp = fresnel_params({30.0 * kDeg, 200.0}, cfg);
    CHECK(fp.alpha == doctest::Approx(M_PI_2));
    CHECK(fp.beta == doctest::Approx(M_PI * 0.1875 / 200.0)); // ~ pi/1067

    FresnelParams broadside = fresnel_params({0.0, 123.0}, cfg);
    CHECK(broadside.alpha == 0.0);
    CHECK(broadside.beta == doctest::Approx(M_PI * 0.25 / 123.0));

    FresnelParams nearly_endfire = fresnel_params({std::nextafter(M_PI_2, 0.0), 500.0}, cfg);
    CHECK(nearly_endfire.beta == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(nearly_endfire.beta >= 0.0);
}

TEST_CASE("source placement validation") {
    ArrayConfig cfg = ArrayConfig::ula(65);
    CHECK_THROWS_AS((SourcePlacement{M_PI_2, 300.0}.validate(cfg)), std::domain_error);
    CHECK_THROWS_AS((SourcePlacement{0.0, -1.0}.validate(cfg)), std::domain_error);
    SourcePlacement outside{0.0, 5000.0}; // beyond the Rayleigh distance
    CHECK_NOTHROW(outside.validate(cfg));
    CHECK_THROWS_AS(outside.validate(cfg, true), std::domain_error);
    CHECK_FALSE(outside.in_fresnel_zone(cfg));
    CHECK(SourcePlacement{0.3, 500.0}.in_fresnel_zone(cfg));
}
