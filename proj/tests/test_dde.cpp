#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "pulsesync/dde.hpp"
#include "pulsesync/errors.hpp"

using namespace pulsesync;

namespace {

const PulseFunction fig2_pulse = PulseFunction::gaussian_comb({1.01, 0.1, 20});

Rk4Options quick() {
    Rk4Options o;
    o.verify_halving = false;
    return o;
}

// Antiderivative of the Gaussian comb, used by the delay-free invariant.
double comb_integral(double th, double xi, double w) {
    double s = 0.0;
    for (int n = -40; n <= 40; ++n) s += 0.5 * std::erf((th + n * xi) / (std::sqrt(2.0) * w));
    return s;
}

}  // namespace

TEST_CASE("free rotation without coupling") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(3, 0.0), std::vector<double>{1.0, 2.0, 0.5},
                          0.05);
    const std::vector<double> th0{0.1, 0.4, -0.3};
    const Trajectory t = integrate_rk4(spec, th0, 3.0, 0.01, quick());
    for (std::size_t k = 0; k < t.nodes(); k += 37)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(t.phase(k, i) == doctest::Approx(th0[i] + spec.omega_of(i) * t.time(k)).epsilon(1e-13));
}

TEST_CASE("constant pulse gives exact linear growth") {
    const SystemSpec spec(PulseFunction::constant(0.5), make_all_to_all(2, 1.0), 1.0, 0.1);
    const std::vector<double> th0{0.0, 0.3};
    const Trajectory t = integrate_rk4(spec, th0, 2.0, 0.02, quick());
    const std::size_t last = t.nodes() - 1;
    CHECK(t.phase(last, 0) == doctest::Approx(1.5 * t.end_time()).epsilon(1e-13));
    CHECK(t.rate(last, 1) == doctest::Approx(1.5));
}

TEST_CASE("Hermite interpolation is exact for cubics") {
    auto p = [](double x) { return 0.3 - x + 2.0 * x * x - 0.7 * x * x * x; };
    auto dp = [](double x) { return -1.0 + 4.0 * x - 2.1 * x * x; };
    const double a = -0.4, h = 0.9;
    for (double s = 0.0; s <= 1.0; s += 0.1) {
        const PhaseRate r = hermite(p(a), dp(a), p(a + h), dp(a + h), h, s);
        CHECK(r.phase == doctest::Approx(p(a + s * h)).epsilon(1e-14));
        CHECK(r.rate == doctest::Approx(dp(a + s * h)).epsilon(1e-13));
    }
}

TEST_CASE("Hermite interpolation error is fourth order") {
    auto err = [](double h) {
        double worst = 0.0;
        for (double a = 0.0; a < 3.0; a += h) {
            const PhaseRate r =
                hermite(std::sin(a), std::cos(a), std::sin(a + h), std::cos(a + h), h, 0.5);
            worst = std::max(worst, std::abs(r.phase - std::sin(a + 0.5 * h)));
        }
        return worst;
    };
    const double order = std::log2(err(0.1) / err(0.05));
    CHECK(order >= 3.7);
    CHECK(order <= 4.3);
}

TEST_CASE("RK4 converges at fourth order with delay") {
    const SystemSpec spec(PulseFunction::gaussian_comb({1.0, 0.2, 20}), make_all_to_all(2, 0.5),
                          1.0, 0.1);
    const std::vector<double> th0{0.3, 0.1};
    auto final_phase = [&](double h) {
        const Trajectory t = integrate_rk4(spec, th0, 2.0, h, quick());
        return t.phase(t.nodes() - 1, 1);
    };
    const double ref = final_phase(0.1 / 512);
    const double e1 = std::abs(final_phase(0.1 / 8) - ref);
    const double e2 = std::abs(final_phase(0.1 / 16) - ref);
    CHECK(std::log2(e1 / e2) >= 3.5);
}

TEST_CASE("identical oscillators stay identical") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(4, 1.0), 2.0, 0.01);
    const std::vector<double> th0(4, 0.2);
    const Trajectory t = integrate_rk4(spec, th0, 2.0, 0.002, quick());
    for (std::size_t k = 0; k < t.nodes(); ++k)
        for (std::size_t i = 1; i < 4; ++i) REQUIRE(t.phase(k, i) == t.phase(k, 0));
}

TEST_CASE("continuing an integration reproduces a single run bitwise") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.01);
    const std::vector<double> th0{0.555, 0.455};
    const Trajectory whole = integrate_rk4(spec, th0, 2.0, 0.002, quick());
    Trajectory part = integrate_rk4(spec, th0, 1.0, 0.002, quick());
    continue_rk4(part, 2.0);
    REQUIRE(part.nodes() == whole.nodes());
    for (std::size_t k = 0; k < whole.nodes(); ++k)
        for (std::size_t i = 0; i < 2; ++i) REQUIRE(part.phase(k, i) == whole.phase(k, i));
}

TEST_CASE("shifting all phases by one period shifts the solution") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.01);
    const Trajectory a = integrate_rk4(spec, std::vector<double>{0.555, 0.455}, 2.0, 0.002, quick());
    const Trajectory b =
        integrate_rk4(spec, std::vector<double>{0.555 + 1.01, 0.455 + 1.01}, 2.0, 0.002, quick());
    for (std::size_t k = 0; k < a.nodes(); ++k)
        CHECK(b.phase(k, 0) - a.phase(k, 0) == doctest::Approx(1.01).epsilon(1e-12));
}

TEST_CASE("delay-free pair conserves G(theta_1) - G(theta_2)") {
    // d theta_1 / d theta_2 = (omega + sigma(theta_2)) / (omega + sigma(theta_1)).
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.0);
    const Trajectory t = integrate_rk4(spec, std::vector<double>{0.555, 0.455}, 4.0, 0.0005, quick());
    auto g = [](double th) { return 2.0 * th + comb_integral(th, 1.01, 0.1); };
    const double c0 = g(t.phase(0, 0)) - g(t.phase(0, 1));
    for (std::size_t k = 0; k < t.nodes(); k += 100)
        CHECK(std::abs(g(t.phase(k, 0)) - g(t.phase(k, 1)) - c0) < 1e-9);
}

TEST_CASE("history evaluation") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.01);
    const Trajectory t = integrate_rk4(spec, std::vector<double>{0.555, 0.455}, 0.5, 0.0025, quick());
    CHECK(t.history_eval(-0.1, 0).phase == doctest::Approx(0.555 - 0.2));
    CHECK(t.history_eval(t.time(7), 1).phase == t.phase(7, 1));
    const double mid = t.history_eval(t.time(7) + 0.5 * t.step(), 1).phase;
    CHECK(mid > t.phase(7, 1));
    CHECK(mid < t.phase(8, 1));
    CHECK_THROWS_AS(t.history_eval(t.end_time() + 0.01, 0), HistoryRangeError);

    const Trajectory f = integrate_rk4(spec, std::vector<double>{0.555, 0.455}, 0.5, 0.0025,
                                       Rk4Options{HistoryPolicy::frozen, false, 1e-8});
    CHECK(f.history_eval(-0.1, 0).phase == 0.555);
    CHECK(f.history_eval(-0.1, 0).rate == 0.0);
}

TEST_CASE("history policy barely matters when starting at the pulse trough") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.01);
    const std::vector<double> th0{0.555, 0.455};
    const Trajectory a = integrate_rk4(spec, th0, 2.0, 0.0025, quick());
    const Trajectory b =
        integrate_rk4(spec, th0, 2.0, 0.0025, Rk4Options{HistoryPolicy::frozen, false, 1e-8});
    const std::size_t last = a.nodes() - 1;
    CHECK(std::abs(a.phase(last, 0) - b.phase(last, 0)) < 1e-5);
}

TEST_CASE("step resolution") {
    CHECK(resolve_step(0.01, 0.003) == doctest::Approx(0.0025));
    CHECK(resolve_step(0.01, 0.001) == doctest::Approx(0.001));
    CHECK(resolve_step(0.0, 0.003) == 0.003);
    CHECK_THROWS_AS(resolve_step(0.01, 0.0), InvalidArgument);
}

TEST_CASE("halving verification passes at the default tolerance") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.01);
    CHECK_NOTHROW(integrate_rk4(spec, std::vector<double>{0.555, 0.455}, 1.0, 0.002));
}

TEST_CASE("failures are reported") {
    const SystemSpec slow(fig2_pulse, make_all_to_all(2, -1.0), 0.5, 0.01);
    CHECK_THROWS_AS(integrate_rk4(slow, std::vector<double>{0.1, 0.0}, 2.0, 0.002, quick()),
                    StepTooLarge);
    const SystemSpec delayed(fig2_pulse, make_all_to_all(2, 1.0), 2.0, 0.01);
    CHECK_THROWS_AS(integrate_euler_forward(delayed, std::vector<double>{0.1, 0.0}, 1.0, 0.01),
                    InvalidArgument);
    CHECK_THROWS_AS(integrate_rk4(delayed, std::vector<double>{0.1}, 1.0, 0.01), InvalidArgument);
    CHECK_THROWS_AS(SystemSpec(fig2_pulse, make_all_to_all(2, 1.0), -1.0, 0.01), InvalidArgument);
    CHECK_THROWS_AS(SystemSpec(fig2_pulse, make_all_to_all(2, 1.0), 1.0, -0.01), InvalidArgument);
}

TEST_CASE("forward Euler matches the exact rotation without coupling") {
    const SystemSpec spec(fig2_pulse, make_all_to_all(2, 0.0), 1.5, 0.0);
    const Trajectory t = integrate_euler_forward(spec, std::vector<double>{0.0, 0.2}, 1.0, 0.1);
    CHECK(t.phase(t.nodes() - 1, 1) == doctest::Approx(0.2 + 1.5 * t.end_time()));
}

TEST_CASE("trajectory CSV") {
    const SystemSpec spec(PulseFunction::constant(0.0), make_all_to_all(2, 0.0), 1.0, 0.0);
    const Trajectory t = integrate_rk4(spec, std::vector<double>{0.0, 0.5}, 1.0, 0.25, quick());
    std::ostringstream out;
    write_trajectory_csv(out, t, 3);
    CHECK(out.str() == "t,theta_1,theta_2,dtheta_1,dtheta_2\n"
                       "0,0,0.5,1,1\n"
                       "0.75,0.75,1.25,1,1\n"
                       "1,1,1.5,1,1\n");
}
