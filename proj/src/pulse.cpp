#include "pulsesync/pulse.hpp"

#include <cmath>
#include <numbers>

#include "pulsesync/errors.hpp"

namespace pulsesync {

namespace {
// exp(-x) is exactly zero in double precision beyond this.
constexpr double kUnderflowExponent = 746.0;
}  // namespace

PulseFunction PulseFunction::gaussian_comb(PulseParams params) {
    if (!(params.xi > 0.0) || !std::isfinite(params.xi))
        throw InvalidArgument("pulse period xi must be positive");
    if (!(params.w > 0.0) || !std::isfinite(params.w))
        throw InvalidArgument("pulse width w must be positive");
    if (params.comb_range < 1) throw InvalidArgument("comb_range must be >= 1");
    PulseFunction p(Kind::gaussian_comb, params, 0.0);
    p.norm_ = 1.0 / std::sqrt(2.0 * std::numbers::pi * params.w * params.w);
    p.inv_two_w2_ = 1.0 / (2.0 * params.w * params.w);
    return p;
}

PulseFunction PulseFunction::constant(double level, double xi) {
    if (!(level >= 0.0) || !std::isfinite(level))
        throw InvalidArgument("constant pulse level must be >= 0");
    if (!(xi > 0.0)) throw InvalidArgument("pulse period xi must be positive");
    return PulseFunction(Kind::constant, PulseParams{xi, 1.0, 1}, level);
}

double PulseFunction::reduce(double theta) const noexcept {
    const double xi = params_.xi;
    return theta - xi * std::floor(theta / xi + 0.5);
}

double PulseFunction::value(double theta) const {
    if (!std::isfinite(theta)) throw InvalidArgument("sigma: non-finite phase");
    if (kind_ == Kind::constant) return level_;

    const double r = reduce(theta);
    const double xi = params_.xi;
    double sum = std::exp(-r * r * inv_two_w2_);
    // Center-outward; terms past the underflow limit are exactly zero.
    bool up = true, down = true;
    for (int n = 1; n <= params_.comb_range && (up || down); ++n) {
        if (up) {
            const double x = r + n * xi;
            const double e = x * x * inv_two_w2_;
            if (e > kUnderflowExponent) up = false;
            else sum += std::exp(-e);
        }
        if (down) {
            const double x = r - n * xi;
            const double e = x * x * inv_two_w2_;
            if (e > kUnderflowExponent) down = false;
            else sum += std::exp(-e);
        }
    }
    return sum * norm_;
}

double PulseFunction::derivative(double theta) const {
    if (!std::isfinite(theta)) throw InvalidArgument("sigma_prime: non-finite phase");
    if (kind_ == Kind::constant) return 0.0;

    const double r = reduce(theta);
    const double xi = params_.xi;
    const double scale = 2.0 * inv_two_w2_;  // 1 / w^2
    double sum = -r * std::exp(-r * r * inv_two_w2_);
    bool up = true, down = true;
    for (int n = 1; n <= params_.comb_range && (up || down); ++n) {
        if (up) {
            const double x = r + n * xi;
            const double e = x * x * inv_two_w2_;
            if (e > kUnderflowExponent) up = false;
            else sum -= x * std::exp(-e);
        }
        if (down) {
            const double x = r - n * xi;
            const double e = x * x * inv_two_w2_;
            if (e > kUnderflowExponent) down = false;
            else sum -= x * std::exp(-e);
        }
    }
    return sum * scale * norm_;
}

double sigma(double theta, const PulseFunction& pulse) { return pulse.value(theta); }

double sigma_prime(double theta, const PulseFunction& pulse) { return pulse.derivative(theta); }

}  // namespace pulsesync
