#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "pulsesync/pulse.hpp"
#include "pulsesync/quadrature.hpp"

namespace pulsesync {

/// Mean-phase rate used by the linear predictors.
enum class MeanRateModel {
    /// T(theta) = omega + J~ (sigma - delta_t (omega + J~ sigma) sigma'), first order in delta_t.
    first_order,
    /// omega + J~ sigma(theta), the delay-free rate.
    leading_order,
};

struct TheoryParams {
    PulseFunction pulse = PulseFunction::constant(0.0);
    double omega = 1.0;
    double jtilde = 0.0;
    double delta_t = 0.0;
    /// Mean phase at t = 0.
    double mean_phase0 = 0.0;
    MeanRateModel rate_model = MeanRateModel::first_order;
    SimpsonOptions quadrature{};

    /// omega + J~ sigma must stay positive over a period.
    void validate() const;
    /// omega + J~ sigma(theta)
    double mean_rate(double theta) const;
    /// T(theta) as defined by rate_model.
    double linear_rate(double theta) const;
};

struct PeriodIntegrals {
    double psi = 0.0;
    double S = 0.0;
};

/// Time for the delay-free mean phase to go from theta_bar0 to theta_bar.
double mean_phase_time(double theta_bar, const TheoryParams& params, double theta_bar0);
/// Inverse of mean_phase_time, monotone in t.
double mean_phase_at(double t, const TheoryParams& params, double theta_bar0);

/// psi = int_0^xi 1/(omega + J~ sigma), S = int_0^xi sigma'^2/(omega + J~ sigma).
PeriodIntegrals period_integrals(const TheoryParams& params);

/// tau = psi / (2 J~^2 delta_t S). Throws InfiniteSyncTime for delta_t = 0 or S = 0.
double sync_time_two(const TheoryParams& params);

/// Linearized mode amplitude of one normal mode.
struct ModePrediction {
    std::complex<double> lambda;
    /// <i|phi(0)>
    std::complex<double> amplitude;
    /// Re[lambda (J~ - lambda)]
    double decay_rate_sign = 0.0;
    /// Infinite unless decay_rate_sign < 0.
    double tau = std::numeric_limits<double>::infinity();
};

/// tau_i = psi / (-Re[lambda (J~ - lambda)] delta_t S). Throws NonDecayingMode
/// when Re >= 0 and InvalidArgument for delta_t <= 0.
double mode_sync_time(std::complex<double> lambda, const TheoryParams& params);

ModePrediction make_mode_prediction(std::complex<double> lambda,
                                    std::complex<double> amplitude, const TheoryParams& params);

/// Caches the period integrals so that long time series are cheap.
class LinearPredictor {
public:
    explicit LinearPredictor(TheoryParams params);

    const TheoryParams& params() const noexcept { return params_; }
    const PeriodIntegrals& integrals() const noexcept { return integrals_; }
    /// int_0^xi sigma'^2 / T over one period.
    double linear_decay_integral() const noexcept { return s_linear_; }

    double mean_phase_time(double theta_bar) const;
    double mean_phase_at(double t) const;

    /// int sigma'^2 / T from the initial mean phase to theta_bar.
    double decay_integral(double theta_bar) const;

    /// Two-oscillator solution phi(t) = (theta_1 - theta_2)/2.
    double phi(double t, double phi0) const;
    /// <i|phi(t)> for the given mode.
    std::complex<double> mode(double t, const ModePrediction& mode) const;

    /// Mean phase and decay integral along non-decreasing times, marching
    /// from one time to the next instead of restarting at t = 0.
    struct Sample {
        double t = 0.0;
        double mean_phase = 0.0;
        double decay_integral = 0.0;
    };
    std::vector<Sample> march(const std::vector<double>& times) const;
    std::vector<double> phi_series(const std::vector<double>& times, double phi0) const;
    std::vector<std::complex<double>> mode_series(const std::vector<double>& times,
                                                  const ModePrediction& mode) const;
    double phi_at(const Sample& s, double phi0) const;
    std::complex<double> mode_at(const Sample& s, const ModePrediction& mode) const;

private:
    double partial_integral(double a, double b, bool linear_rate_density) const;

    TheoryParams params_;
    PeriodIntegrals integrals_;
    double s_linear_ = 0.0;
    double rate0_ = 0.0;
    int panels_per_period_ = 16;
};

double predict_phi(double t, double phi0, const TheoryParams& params);
std::complex<double> predict_mode(double t, const ModePrediction& mode,
                                  const TheoryParams& params);

/// Below this |J~| the prefactor uses its J~ -> 0 limit.
inline constexpr double kSmallCoupling = 1e-8;

}  // namespace pulsesync
