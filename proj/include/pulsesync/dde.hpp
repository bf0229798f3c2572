#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "pulsesync/network.hpp"
#include "pulsesync/pulse.hpp"

namespace pulsesync {

/// Delayed pulse-coupled system: d theta_i/dt = omega_i + sum_j J_ij sigma(theta_j(t - delta_t)).
struct SystemSpec {
    PulseFunction pulse;
    CouplingMatrix coupling;
    /// One entry (shared) or one per oscillator.
    std::vector<double> omega;
    double delta_t = 0.0;

    SystemSpec(PulseFunction pulse, CouplingMatrix coupling, double omega, double delta_t);
    SystemSpec(PulseFunction pulse, CouplingMatrix coupling, std::vector<double> omega,
               double delta_t);

    std::size_t size() const noexcept { return coupling.size(); }
    double omega_of(std::size_t i) const { return omega.size() == 1 ? omega[0] : omega[i]; }
    bool uniform_omega() const noexcept;

    /// Throws InvalidArgument if any invariant is broken.
    void validate() const;
};

/// Phases before t = 0.
enum class HistoryPolicy {
    constant_rate,  ///< theta_i(t) = theta_i(0) + omega_i t
    frozen,         ///< theta_i(t) = theta_i(0)
};

struct PhaseRate {
    double phase = 0.0;
    double rate = 0.0;
};

/// Uniform-grid solution theta_i(t_k), with t_k = k h, and the right-hand
/// side at every node. Continuous between nodes through cubic Hermite
/// interpolation; the history policy supplies t < 0.
class Trajectory {
public:
    Trajectory(SystemSpec spec, std::vector<double> theta0, HistoryPolicy policy, double step);

    /// Builds a trajectory from samples (row k holds the n phases at t = k h).
    static Trajectory from_samples(SystemSpec spec, double step, std::vector<double> phases,
                                   std::vector<double> rates,
                                   HistoryPolicy policy = HistoryPolicy::constant_rate);

    const SystemSpec& spec() const noexcept { return spec_; }
    HistoryPolicy policy() const noexcept { return policy_; }
    const std::vector<double>& initial_phases() const noexcept { return theta0_; }
    double step() const noexcept { return step_; }
    std::size_t oscillators() const noexcept { return n_; }
    std::size_t nodes() const noexcept { return phases_.size() / n_; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * step_; }
    double end_time() const noexcept { return time(nodes() - 1); }

    double phase(std::size_t k, std::size_t i) const { return phases_[k * n_ + i]; }
    double rate(std::size_t k, std::size_t i) const { return rates_[k * n_ + i]; }
    std::span<const double> phases(std::size_t k) const {
        return {phases_.data() + k * n_, n_};
    }
    std::span<const double> rates(std::size_t k) const { return {rates_.data() + k * n_, n_}; }

    /// Stored value at nodes, cubic Hermite between nodes, the history policy
    /// for t < 0. Throws HistoryRangeError past the last node.
    PhaseRate history_eval(double t, std::size_t i) const;

    void append(std::span<const double> phases, std::span<const double> rates);
    void set_rates(std::size_t k, std::span<const double> rates);

private:
    PhaseRate pre_initial(double t, std::size_t i) const;

    SystemSpec spec_;
    std::vector<double> theta0_;
    HistoryPolicy policy_;
    double step_;
    std::size_t n_;
    std::vector<double> phases_;
    std::vector<double> rates_;
};

PhaseRate history_eval(const Trajectory& traj, double t, std::size_t i);

/// Cubic Hermite interpolation on [0, 1] scaled by the interval length h.
PhaseRate hermite(double y0, double d0, double y1, double d1, double h, double s);

struct Rk4Options {
    HistoryPolicy policy = HistoryPolicy::constant_rate;
    /// Re-run at h/2 and compare theta(t_end).
    bool verify_halving = true;
    double halving_rtol = 1e-8;
};

/// Step actually used for a requested step: for delta_t > 0 the largest
/// h <= h_req with delta_t = m h, m >= 4 integer.
double resolve_step(double delta_t, double h_req);

/// Method of steps with classical RK4. Delayed values at half steps come from
/// cubic Hermite interpolation of the stored grid. Throws StepTooLarge when a
/// phase fails to increase or the halving check exceeds its tolerance.
Trajectory integrate_rk4(const SystemSpec& spec, std::span<const double> theta0, double t_end,
                         double h_req, const Rk4Options& options = {});

/// Extends an RK4 trajectory to t_end with its own step. Gives the same
/// nodes as a single integration to t_end.
void continue_rk4(Trajectory& traj, double t_end);

/// Naive explicit Euler, only for delta_t = 0.
Trajectory integrate_euler_forward(const SystemSpec& spec, std::span<const double> theta0,
                                   double t_end, double h);

/// Right-hand side from the stored history at node k (delayed by delta_t).
std::vector<double> rhs_at_node(const Trajectory& traj, std::size_t k);

/// CSV: t,theta_1..theta_n,dtheta_1..dtheta_n. `stride` keeps every stride-th node.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride = 1);

}  // namespace pulsesync
