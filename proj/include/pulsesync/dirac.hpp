#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace pulsesync {

struct DiracParams {
    double omega = 1.0;
    /// Phase jump delivered by each pulse.
    double jump = 0.1;
    double delta_t = 0.0;
    /// EventFlood is raised when more than this many pulses arrive within one
    /// unit of time.
    std::size_t max_events_per_time = 100000;
};

struct ReceiverJump {
    std::size_t receiver = 0;
    double before = 0.0;
    double after = 0.0;
    /// The jump carried the receiver across (or onto) an integer; that
    /// firing is lost.
    bool skipped_crossing = false;
    /// The receiver sat exactly on an integer when the pulse arrived.
    bool coincident = false;
};

/// One delivered pulse.
struct PulseEvent {
    double time = 0.0;
    double emission_time = 0.0;
    std::size_t emitter = 0;
    double theta_emitter_after = 0.0;
    std::vector<ReceiverJump> jumps;
};

/// Piece of a phase with slope omega starting at (t0, theta0).
struct PhaseSegment {
    double t0 = 0.0;
    double theta0 = 0.0;
};

/// Exact solution of the Dirac-pulse model: piecewise linear phases plus
/// the ordered list of delivered pulses.
class EventTrajectory {
public:
    EventTrajectory(DiracParams params, std::vector<double> theta0, double t_end);

    const DiracParams& params() const noexcept { return params_; }
    std::size_t oscillators() const noexcept { return segments_.size(); }
    double end_time() const noexcept { return t_end_; }
    const std::vector<PulseEvent>& events() const noexcept { return events_; }
    const std::vector<PhaseSegment>& segments(std::size_t i) const { return segments_[i]; }
    /// Continuous crossings (emissions) of oscillator i.
    const std::vector<double>& emissions(std::size_t i) const { return emissions_[i]; }
    /// Arrivals still pending at end_time().
    std::size_t pending() const noexcept { return pending_; }

    /// Right-continuous phase of oscillator i at time t in [0, end_time()].
    double phase(std::size_t i, double t) const;

private:
    friend EventTrajectory simulate_dirac(const DiracParams&, const std::vector<double>&, double);

    DiracParams params_;
    double t_end_;
    std::vector<std::vector<PhaseSegment>> segments_;
    std::vector<std::vector<double>> emissions_;
    std::vector<PulseEvent> events_;
    std::size_t pending_ = 0;
};

/// Event-driven simulation with all-to-all unit adjacency scaled by `jump`.
EventTrajectory simulate_dirac(const DiracParams& params, const std::vector<double>& theta0,
                               double t_end);

/// CSV: t,emitter,theta_emitter_after,receiver_jumps. Receiver jumps are
/// `index:before>after` joined by ';', with '*' appended to flag integer
/// coincidences.
void write_events_csv(std::ostream& out, const EventTrajectory& traj);
/// Sampled phases in the trajectory CSV layout (rates are omega between events).
void write_dirac_samples_csv(std::ostream& out, const EventTrajectory& traj, double dt);

}  // namespace pulsesync
