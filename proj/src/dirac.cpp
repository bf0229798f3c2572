#include "pulsesync/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <queue>
#include <string>

#include "pulsesync/errors.hpp"
#include "pulsesync/format.hpp"

namespace pulsesync {

namespace {

constexpr double kSimultaneous = 1e-12;

struct Arrival {
    double time;
    std::size_t emitter;
    double emission_time;
    std::size_t seq;
};

struct ArrivalLater {
    bool operator()(const Arrival& a, const Arrival& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.emitter != b.emitter) return a.emitter > b.emitter;
        return a.seq > b.seq;
    }
};

bool on_integer(double theta) { return std::fabs(theta - std::round(theta)) <= kSimultaneous; }

}  // namespace

EventTrajectory::EventTrajectory(DiracParams params, std::vector<double> theta0, double t_end)
    : params_(params), t_end_(t_end), segments_(theta0.size()), emissions_(theta0.size()) {
    for (std::size_t i = 0; i < theta0.size(); ++i) segments_[i].push_back({0.0, theta0[i]});
}

double EventTrajectory::phase(std::size_t i, double t) const {
    if (i >= segments_.size()) throw InvalidArgument("phase: oscillator index out of range");
    const auto& segs = segments_[i];
    auto it = std::upper_bound(segs.begin(), segs.end(), t,
                               [](double value, const PhaseSegment& s) { return value < s.t0; });
    if (it == segs.begin()) return segs.front().theta0 + params_.omega * (t - segs.front().t0);
    --it;
    return it->theta0 + params_.omega * (t - it->t0);
}

EventTrajectory simulate_dirac(const DiracParams& params, const std::vector<double>& theta0,
                               double t_end) {
    if (!(params.omega > 0.0)) throw InvalidArgument("dirac: omega must be > 0");
    if (!(params.jump >= 0.0)) throw InvalidArgument("dirac: jump must be >= 0");
    if (!(params.delta_t >= 0.0)) throw InvalidArgument("dirac: delta_t must be >= 0");
    if (theta0.size() < 2) throw InvalidArgument("dirac: need at least two oscillators");
    if (!(t_end > 0.0)) throw InvalidArgument("dirac: t_end must be > 0");
    for (double th : theta0)
        if (!std::isfinite(th)) throw InvalidArgument("dirac: initial phases must be finite");

    EventTrajectory traj(params, theta0, t_end);
    const std::size_t n = theta0.size();
    const double omega = params.omega;

    // Next integer each oscillator reaches by continuous motion.
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = std::floor(theta0[i]) + 1.0;

    auto current = [&](std::size_t i) -> const PhaseSegment& { return traj.segments_[i].back(); };
    auto crossing_time = [&](std::size_t i) {
        const PhaseSegment& s = current(i);
        return s.t0 + (target[i] - s.theta0) / omega;
    };

    std::priority_queue<Arrival, std::vector<Arrival>, ArrivalLater> queue;
    std::deque<double> recent;
    std::size_t seq = 0;
    const double inf = std::numeric_limits<double>::infinity();

    while (true) {
        double t_min = queue.empty() ? inf : queue.top().time;
        for (std::size_t i = 0; i < n; ++i) t_min = std::min(t_min, crossing_time(i));
        if (t_min > t_end) break;

        // Among events within kSimultaneous of the earliest one, the lowest
        // oscillator index goes first; a crossing precedes an arrival
        // emitted by the same oscillator.
        std::size_t cross_idx = n;
        for (std::size_t i = 0; i < n; ++i)
            if (crossing_time(i) <= t_min + kSimultaneous) {
                cross_idx = i;
                break;
            }
        const bool arrival_ready = !queue.empty() && queue.top().time <= t_min + kSimultaneous;
        const bool take_crossing =
            cross_idx < n && (!arrival_ready || cross_idx <= queue.top().emitter);

        if (take_crossing) {
            const std::size_t i = cross_idx;
            const double tc = crossing_time(i);
            traj.segments_[i].push_back({tc, target[i]});
            traj.emissions_[i].push_back(tc);
            target[i] += 1.0;
            queue.push({tc + params.delta_t, i, tc, seq++});
            continue;
        }

        const Arrival arr = queue.top();
        queue.pop();
        const double t = arr.time;
        recent.push_back(t);
        while (!recent.empty() && recent.front() <= t - 1.0) recent.pop_front();
        if (recent.size() > params.max_events_per_time)
            throw EventFlood("dirac: more than " + std::to_string(params.max_events_per_time) +
                             " pulses per unit time near t=" + std::to_string(t));

        PulseEvent ev;
        ev.time = t;
        ev.emission_time = arr.emission_time;
        ev.emitter = arr.emitter;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == arr.emitter) continue;
            const PhaseSegment& s = current(j);
            ReceiverJump jump;
            jump.receiver = j;
            jump.before = s.theta0 + omega * (t - s.t0);
            jump.after = jump.before + params.jump;
            jump.coincident = on_integer(jump.before);
            // Integers passed (or landed on) by the jump do not fire.
            if (jump.after >= target[j]) {
                jump.skipped_crossing = true;
                target[j] = std::floor(jump.after) + 1.0;
            }
            if (jump.after != jump.before) traj.segments_[j].push_back({t, jump.after});
            ev.jumps.push_back(jump);
        }
        const PhaseSegment& se = current(arr.emitter);
        ev.theta_emitter_after = se.theta0 + omega * (t - se.t0);
        traj.events_.push_back(std::move(ev));
    }
    traj.pending_ = queue.size();
    return traj;
}

void write_events_csv(std::ostream& out, const EventTrajectory& traj) {
    out << "t,emitter,theta_emitter_after,receiver_jumps\n";
    for (const PulseEvent& ev : traj.events()) {
        out << format_double(ev.time) << ',' << ev.emitter + 1 << ','
            << format_double(ev.theta_emitter_after) << ',';
        for (std::size_t k = 0; k < ev.jumps.size(); ++k) {
            const ReceiverJump& j = ev.jumps[k];
            if (k) out << ';';
            out << j.receiver + 1 << ':' << format_double(j.before) << '>'
                << format_double(j.after);
            if (j.coincident) out << '*';
        }
        out << '\n';
    }
}

void write_dirac_samples_csv(std::ostream& out, const EventTrajectory& traj, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("sample spacing must be > 0");
    const std::size_t n = traj.oscillators();
    out << "t";
    for (std::size_t i = 1; i <= n; ++i) out << ",theta_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",dtheta_" << i;
    out << '\n';
    const auto samples = static_cast<std::size_t>(std::floor(traj.end_time() / dt + 1e-9));
    for (std::size_t k = 0; k <= samples; ++k) {
        const double t = static_cast<double>(k) * dt;
        out << format_double(t);
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(traj.phase(i, t));
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(traj.params().omega);
        out << '\n';
    }
}

}  // namespace pulsesync
