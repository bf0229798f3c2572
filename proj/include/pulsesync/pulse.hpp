#pragma once

namespace pulsesync {

/// Gaussian comb parameters. `xi` is the period, `w` the Gaussian width,
/// `comb_range` the number of images summed on each side of the center.
struct PulseParams {
    double xi = 1.0;
    double w = 0.1;
    int comb_range = 20;
};

/// Periodic feedback function sigma(theta) and its derivative.
///
/// Two kinds exist: a comb of unit-normalized Gaussians (one per period) and
/// a constant level, the latter mainly for degenerate test cases. Phases are
/// reduced modulo xi into [-xi/2, xi/2) before the comb is summed, so very
/// large phases do not lose accuracy in the exponents.
class PulseFunction {
public:
    enum class Kind { gaussian_comb, constant };

    static PulseFunction gaussian_comb(PulseParams params);
    /// Constant level >= 0; `xi` is the nominal period used by period integrals.
    static PulseFunction constant(double level, double xi = 1.0);

    Kind kind() const noexcept { return kind_; }
    double period() const noexcept { return params_.xi; }
    double width() const noexcept { return params_.w; }
    int comb_range() const noexcept { return params_.comb_range; }
    double level() const noexcept { return level_; }
    const PulseParams& params() const noexcept { return params_; }

    double value(double theta) const;
    double derivative(double theta) const;

    /// Reduces theta into [-xi/2, xi/2).
    double reduce(double theta) const noexcept;

private:
    PulseFunction(Kind kind, PulseParams params, double level)
        : kind_(kind), params_(params), level_(level) {}

    Kind kind_;
    PulseParams params_;
    double level_ = 0.0;
    double norm_ = 0.0;
    double inv_two_w2_ = 0.0;
};

double sigma(double theta, const PulseFunction& pulse);
double sigma_prime(double theta, const PulseFunction& pulse);

}  // namespace pulsesync
