#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pulsesync/dirac.hpp"
#include "pulsesync/errors.hpp"

using namespace pulsesync;

namespace {
DiracParams params(double delta_t) {
    DiracParams p;
    p.omega = 1.0;
    p.jump = 0.1;
    p.delta_t = delta_t;
    return p;
}
}  // namespace

TEST_CASE("hand trace without delay") {
    const EventTrajectory ev = simulate_dirac(params(0.0), {0.6, 0.3}, 0.65);
    REQUIRE(ev.events().size() == 2);
    const PulseEvent& first = ev.events()[0];
    CHECK(first.time == doctest::Approx(0.4));
    CHECK(first.emitter == 0);
    REQUIRE(first.jumps.size() == 1);
    CHECK(first.jumps[0].before == doctest::Approx(0.7));
    CHECK(first.jumps[0].after == doctest::Approx(0.8));
    const PulseEvent& second = ev.events()[1];
    CHECK(second.time == doctest::Approx(0.6));
    CHECK(second.jumps[0].before == doctest::Approx(1.2));
    CHECK(second.jumps[0].after == doctest::Approx(1.3));
    CHECK(ev.phase(0, 0.61) - ev.phase(1, 0.61) == doctest::Approx(0.3));
}

TEST_CASE("boundary phase difference is conserved without delay") {
    for (double b : {0.3, 0.05, 0.45}) {
        const EventTrajectory ev = simulate_dirac(params(0.0), {0.6, b}, 101.0);
        const auto& fire = ev.emissions(0);
        REQUIRE(fire.size() >= 100);
        const double d0 = ev.phase(0, fire.front()) - ev.phase(1, fire.front());
        for (double t : fire) REQUIRE(std::abs(ev.phase(0, t) - ev.phase(1, t) - d0) <= 1e-12);
    }
}

TEST_CASE("delayed pulses arrive delta_t after the crossing") {
    const EventTrajectory ev = simulate_dirac(params(0.5), {0.6, 0.3}, 3.0);
    for (const PulseEvent& e : ev.events())
        CHECK(e.time - e.emission_time == doctest::Approx(0.5));
    CHECK(ev.events().front().time == doctest::Approx(0.9));
    // Crossings at 0.4 and 0.7 have not arrived yet at t = 0.8.
    const EventTrajectory early = simulate_dirac(params(0.5), {0.6, 0.3}, 0.8);
    CHECK(early.events().empty());
    CHECK(early.pending() == 2);
}

TEST_CASE("a jump across an integer skips that firing") {
    // theta_2 sits at 0.95 when the first pulse lands at t = 0.9.
    const EventTrajectory ev = simulate_dirac(params(0.5), {0.6, 0.05}, 2.5);
    const PulseEvent& first = ev.events().front();
    REQUIRE(first.jumps.size() == 1);
    CHECK(first.jumps[0].before == doctest::Approx(0.95));
    CHECK(first.jumps[0].skipped_crossing);
    // The next continuous crossing of theta_2 is at 2, not 1.
    REQUIRE_FALSE(ev.emissions(1).empty());
    CHECK(ev.emissions(1).front() == doctest::Approx(1.85));
}

TEST_CASE("receiver overtakes the emitter when closer than one jump") {
    const EventTrajectory ev = simulate_dirac(params(0.5), {0.6, 0.55}, 2.0);
    CHECK(ev.phase(0, 0.0) > ev.phase(1, 0.0));
    CHECK(ev.phase(0, 0.92) < ev.phase(1, 0.92));
}

TEST_CASE("spec initial condition settles into a two-cycle") {
    const EventTrajectory ev = simulate_dirac(params(0.5), {0.6, 0.3}, 20.0);
    for (double t = 0.0; t <= 20.0; t += 0.01) {
        const double d = ev.phase(0, t) - ev.phase(1, t);
        REQUIRE(d > 0.15);
        REQUIRE(d < 0.35);
    }
}

TEST_CASE("zero coupling is free rotation") {
    DiracParams p = params(0.3);
    p.jump = 0.0;
    const EventTrajectory ev = simulate_dirac(p, {0.6, 0.3, 0.1}, 10.0);
    for (double t = 0.0; t <= 10.0; t += 0.37)
        CHECK(ev.phase(2, t) == doctest::Approx(0.1 + t).epsilon(1e-12));
    for (const PulseEvent& e : ev.events())
        for (const ReceiverJump& j : e.jumps) CHECK(j.after == j.before);
}

TEST_CASE("phases are piecewise linear with slope omega") {
    DiracParams p = params(0.2);
    p.omega = 1.7;
    const EventTrajectory ev = simulate_dirac(p, {0.6, 0.3, 0.9}, 8.0);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& seg = ev.segments(i);
        for (std::size_t k = 0; k + 1 < seg.size(); ++k) {
            const double mid = 0.5 * (seg[k].t0 + seg[k + 1].t0);
            CHECK(ev.phase(i, mid) == doctest::Approx(seg[k].theta0 + 1.7 * (mid - seg[k].t0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("one emission per continuous crossing") {
    const EventTrajectory ev = simulate_dirac(params(0.0), {0.6, 0.3}, 10.0);
    const auto& fire = ev.emissions(0);
    for (std::size_t k = 0; k < fire.size(); ++k) {
        const double th = ev.phase(0, fire[k]);
        CHECK(th == doctest::Approx(std::round(th)).epsilon(1e-12));
    }
}

TEST_CASE("event flood and invalid input") {
    DiracParams p = params(0.0);
    p.max_events_per_time = 1;
    CHECK_THROWS_AS(simulate_dirac(p, {0.6, 0.3}, 10.0), EventFlood);
    CHECK_THROWS_AS(simulate_dirac(params(0.0), {0.6}, 10.0), InvalidArgument);
    CHECK_THROWS_AS(simulate_dirac(params(-0.1), {0.6, 0.3}, 10.0), InvalidArgument);
}

TEST_CASE("events CSV layout") {
    const EventTrajectory ev = simulate_dirac(params(0.0), {0.6, 0.3}, 0.65);
    std::ostringstream out;
    write_events_csv(out, ev);
    CHECK(out.str() == "t,emitter,theta_emitter_after,receiver_jumps\n"
                       "0.4,1,1,2:0.7>0.7999999999999999\n"
                       "0.6000000000000001,2,1,1:1.2000000000000002>1.3000000000000003\n");
}
