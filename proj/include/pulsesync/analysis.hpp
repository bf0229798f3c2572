#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulsesync/dde.hpp"

namespace pulsesync {

/// Samples on a uniform grid t_k = t0 + k h; `rates` may be empty, in which
/// case the series is treated as piecewise linear.
struct SampledSeries {
    double t0 = 0.0;
    double step = 1.0;
    std::vector<double> values;
    std::vector<double> rates;

    std::size_t size() const noexcept { return values.size(); }
    double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * step; }
    /// Interpolated value at t inside the grid.
    double at(double t) const;
    /// Integral over [a, b] (exact for the interpolant).
    double integral(double a, double b) const;
};

/// Trailing one-period averages of a phase difference.
struct WindowSeries {
    std::vector<double> times;
    std::vector<double> values;
    /// Window length t* at each output time.
    std::vector<double> window;
};

/// Averages `signal` over [t - t*, t], with t* the trailing time over which
/// `mean_phase` advanced by xi. One output per input node (every stride-th)
/// once a full window fits.
WindowSeries window_average(const SampledSeries& mean_phase, const SampledSeries& signal,
                            double xi, std::size_t stride = 1);

/// Left Perron weights <1| of the trajectory's coupling (uniform for
/// symmetric all-to-all networks).
std::vector<double> perron_weights(const SystemSpec& spec);

/// <1|theta(t)> as a series with rates.
SampledSeries mean_phase_series(const Trajectory& traj);
/// theta_i - theta_j as a series with rates.
SampledSeries difference_series(const Trajectory& traj, std::size_t i, std::size_t j);

/// Windowed theta_i - theta_j. Throws TrajectoryTooShort below two periods.
WindowSeries windowed_phase_diff(const Trajectory& traj, std::size_t i, std::size_t j,
                                 std::size_t stride = 1);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t points = 0;
    /// RMS of the log residuals.
    double rms = 0.0;
};

struct SyncTimeEstimate {
    double tau = 0.0;
    DecayFit fit;
};

/// Least-squares fit of log|value| against t on the samples that fall in
/// [lower_frac, upper_frac] times the initial |value|; tau = -1/slope.
/// Throws NoDecay when fewer than 10 samples qualify or the slope is >= 0.
SyncTimeEstimate measure_sync_time(const WindowSeries& series, double upper_frac = 0.9,
                                   double lower_frac = 0.01);

struct SyncReport {
    std::size_t i = 0;
    std::size_t j = 0;
    std::optional<double> tau_measured;
    long mu = 0;
    double residual = 0.0;
    bool synced = false;
    std::optional<DecayFit> fit;
    /// Residuals at the ends of the last windows (oldest first).
    std::vector<double> trend;
};

/// Per pair: mu = round(delta_theta / xi), residual = |delta_theta - mu xi|,
/// synced iff residual < tol and the residual did not grow over the last
/// `windows` windows.
std::vector<SyncReport> strong_sync_check(const Trajectory& traj, double tol,
                                          std::size_t windows = 5);
SyncReport strong_sync_check_pair(const Trajectory& traj, std::size_t i, std::size_t j,
                                  double tol, std::size_t windows = 5);

/// key=value block.
void write_sync_report(std::ostream& out, const SyncReport& report);

struct PeakPair {
    /// Time of the sigma(theta_i(t)) maximum.
    double sigma_peak = 0.0;
    /// Rate peak minus sigma peak; empty when no rate maximum is nearby.
    std::optional<double> offset;
    /// Full width at half maximum of the sigma(theta_i(t)) maximum, in time.
    std::optional<double> fwhm;
};

struct MechanismSeries {
    std::vector<double> times;
    /// sigma(theta_i(t)) and d theta_i/dt, one vector per oscillator.
    std::vector<std::vector<double>> sigma;
    std::vector<std::vector<double>> rate;
    std::vector<std::vector<PeakPair>> peaks;
};

/// Series for the Doppler diagnostic plus per-period peak offsets and widths.
MechanismSeries mechanism_series(const Trajectory& traj);

/// Sub-sample location of a discrete maximum at index k (parabola through
/// k-1, k, k+1).
double refine_peak(std::span<const double> y, std::size_t k, double t0, double h);

void write_window_csv(std::ostream& out, const WindowSeries& series);
/// t,sigma_1,sigma_2,...,rate_1,rate_2,...
void write_mechanism_csv(std::ostream& out, const MechanismSeries& series,
                         std::size_t stride = 1);

}  // namespace pulsesync
