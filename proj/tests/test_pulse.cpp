#include <doctest.h>

#include <cmath>
#include <limits>

#include "pulsesync/errors.hpp"
#include "pulsesync/pulse.hpp"
#include "pulsesync/quadrature.hpp"
#include "pulsesync/rng.hpp"

using namespace pulsesync;

namespace {
const PulseFunction fig2 = PulseFunction::gaussian_comb({1.01, 0.1, 20});
}

TEST_CASE("peak value matches the normalized Gaussian") {
    // 1/sqrt(2 pi w^2) plus negligible neighbours.
    CHECK(sigma(0.0, fig2) == doctest::Approx(3.989422804014327).epsilon(1e-14));
}

TEST_CASE("trough value: two comb images contribute equally") {
    CHECK(sigma(0.505, fig2) == doctest::Approx(2.3128238071595637e-5).epsilon(1e-12));
}

TEST_CASE("derivative golden value and sign") {
    CHECK(sigma_prime(0.1, fig2) == doctest::Approx(-24.197072451914335).epsilon(1e-12));
    CHECK(sigma_prime(-0.1, fig2) == doctest::Approx(24.197072451914335).epsilon(1e-12));
    CHECK(std::abs(sigma_prime(0.0, fig2)) < 1e-12);
}

TEST_CASE("periodicity over random phases") {
    SplitMix64 rng(11);
    for (int k = 0; k < 10000; ++k) {
        const double th = (rng.uniform() - 0.5) * 40.0;
        const int shift = static_cast<int>(rng.uniform() * 20.0) - 10;
        const double a = sigma(th, fig2);
        const double b = sigma(th + shift * 1.01, fig2);
        REQUIRE(std::abs(a - b) <= 1e-12 * std::max(1.0, a));
    }
}

TEST_CASE("evenness") {
    for (double th = 0.0; th < 1.0; th += 0.013)
        CHECK(sigma(th, fig2) == doctest::Approx(sigma(-th, fig2)).epsilon(1e-13));
}

TEST_CASE("one period integrates to one") {
    const auto r = integrate_simpson([](double x) { return sigma(x, fig2); }, -0.505, 0.505);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
    const auto shifted = integrate_simpson([](double x) { return sigma(x, fig2); }, 0.2, 1.21);
    CHECK(shifted.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("derivative agrees with central differences") {
    const double h = 1e-5;
    for (double th = -0.5; th < 0.5; th += 0.0371) {
        const double fd = (sigma(th + h, fig2) - sigma(th - h, fig2)) / (2 * h);
        CHECK(sigma_prime(th, fig2) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("values stay positive") {
    for (double th = 0.0; th < 2.02; th += 0.001) REQUIRE(sigma(th, fig2) > 0.0);
}

TEST_CASE("wide pulse approaches the constant 1/xi") {
    const PulseFunction wide = PulseFunction::gaussian_comb({1.0, 2.0, 20});
    for (double th = 0.0; th < 1.0; th += 0.1) CHECK(sigma(th, wide) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constant pulse") {
    const PulseFunction c = PulseFunction::constant(0.7, 2.0);
    CHECK(sigma(13.1, c) == 0.7);
    CHECK(sigma_prime(13.1, c) == 0.0);
    CHECK(c.period() == 2.0);
}

TEST_CASE("reduction lands in [-xi/2, xi/2)") {
    SplitMix64 rng(5);
    for (int k = 0; k < 1000; ++k) {
        const double th = (rng.uniform() - 0.5) * 1e4;
        const double r = fig2.reduce(th);
        REQUIRE(r >= -0.505);
        REQUIRE(r < 0.505);
    }
}

TEST_CASE("invalid parameters and inputs are rejected") {
    CHECK_THROWS_AS(PulseFunction::gaussian_comb({0.0, 0.1, 20}), InvalidArgument);
    CHECK_THROWS_AS(PulseFunction::gaussian_comb({1.0, -0.1, 20}), InvalidArgument);
    CHECK_THROWS_AS(sigma(std::numeric_limits<double>::quiet_NaN(), fig2), InvalidArgument);
    CHECK_THROWS_AS(sigma(std::numeric_limits<double>::infinity(), fig2), InvalidArgument);
}
