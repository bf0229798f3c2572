#include "pulsesync/lintheory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pulsesync/errors.hpp"

namespace pulsesync {

namespace {

int panels_per_period(const PulseFunction& pulse) {
    if (pulse.kind() == PulseFunction::Kind::constant) return 16;
    const double ratio = pulse.period() / pulse.width();
    return static_cast<int>(std::clamp(std::ceil(8.0 * ratio), 16.0, 1.0e6));
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const TheoryParams& params, int per_period) {
    if (a == b) return 0.0;
    SimpsonOptions opt = params.quadrature;
    const double span = std::fabs(b - a) / params.pulse.period();
    opt.initial_panels = std::max(4, static_cast<int>(std::ceil(per_period * span)));
    return integrate_simpson(f, a, b, opt).value;
}

double psi_integral(const TheoryParams& p, int per_period) {
    const double x0 = -0.5 * p.pulse.period();
    return integrate([&](double th) { return 1.0 / p.mean_rate(th); }, x0,
                     x0 + p.pulse.period(), p, per_period);
}

// Solves int_0^x dtheta / rate(theta0 + theta) = r for x in [0, xi].
double invert_partial_period(const TheoryParams& p, double theta0, double r, double psi,
                             int per_period) {
    const double xi = p.pulse.period();
    if (r <= 0.0) return 0.0;
    if (r >= psi) return xi;
    double lo = 0.0, hi = xi;
    double x = xi * r / psi;
    for (int it = 0; it < 200; ++it) {
        const double f =
            integrate([&](double th) { return 1.0 / p.mean_rate(th); }, theta0, theta0 + x, p,
                      per_period) -
            r;
        if (f > 0.0) hi = x;
        else lo = x;
        double next = x - f * p.mean_rate(theta0 + x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const bool done = std::fabs(next - x) <= 1e-12 || hi - lo <= 1e-12;
        x = next;
        if (done) return x;
    }
    return x;
}

}  // namespace

void TheoryParams::validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidArgument("omega must be > 0");
    if (!std::isfinite(jtilde)) throw InvalidArgument("J~ must be finite");
    if (!(delta_t >= 0.0) || !std::isfinite(delta_t))
        throw InvalidArgument("delta_t must be finite and >= 0");
    if (!std::isfinite(mean_phase0)) throw InvalidArgument("initial mean phase must be finite");
    // sigma is largest at the comb centers and smallest half a period away.
    const double xi = pulse.period();
    const double smax = pulse.value(0.0);
    const double smin = pulse.value(0.5 * xi);
    const double lowest = omega + std::min(jtilde * smax, jtilde * smin);
    if (!(lowest > 0.0)) {
        std::ostringstream msg;
        msg << "mean phase rate omega + J~ sigma reaches " << lowest
            << " <= 0; the linear theory needs a positive rate";
        throw InvalidArgument(msg.str());
    }
}

double TheoryParams::mean_rate(double theta) const { return omega + jtilde * pulse.value(theta); }

double TheoryParams::linear_rate(double theta) const {
    const double s = pulse.value(theta);
    const double rate = omega + jtilde * s;
    if (rate_model == MeanRateModel::leading_order) return rate;
    return omega + jtilde * (s - delta_t * rate * pulse.derivative(theta));
}

double mean_phase_time(double theta_bar, const TheoryParams& params, double theta_bar0) {
    params.validate();
    if (!(theta_bar >= theta_bar0)) throw InvalidArgument("mean_phase_time: theta_bar < theta_bar0");
    const int per = panels_per_period(params.pulse);
    const double xi = params.pulse.period();
    const double periods = std::floor((theta_bar - theta_bar0) / xi);
    double t = 0.0;
    double start = theta_bar0;
    if (periods > 0.0) {
        t = periods * psi_integral(params, per);
        start = theta_bar0 + periods * xi;
    }
    return t + integrate([&](double th) { return 1.0 / params.mean_rate(th); }, start, theta_bar,
                         params, per);
}

double mean_phase_at(double t, const TheoryParams& params, double theta_bar0) {
    params.validate();
    if (!(t >= 0.0)) throw InvalidArgument("mean_phase_at: t must be >= 0");
    const int per = panels_per_period(params.pulse);
    const double xi = params.pulse.period();
    const double psi = psi_integral(params, per);
    const double periods = std::floor(t / psi);
    const double r = t - periods * psi;
    return theta_bar0 + periods * xi + invert_partial_period(params, theta_bar0, r, psi, per);
}

PeriodIntegrals period_integrals(const TheoryParams& params) {
    params.validate();
    const int per = panels_per_period(params.pulse);
    const double x0 = -0.5 * params.pulse.period();
    const double x1 = x0 + params.pulse.period();
    PeriodIntegrals out;
    out.psi = psi_integral(params, per);
    out.S = integrate(
        [&](double th) {
            const double d = params.pulse.derivative(th);
            return d * d / params.mean_rate(th);
        },
        x0, x1, params, per);
    return out;
}

double sync_time_two(const TheoryParams& params) {
    if (params.delta_t == 0.0) throw InfiniteSyncTime("no synchronization without delay");
    if (params.jtilde == 0.0) throw InfiniteSyncTime("J~ = 0: no two-oscillator coupling");
    const PeriodIntegrals pi = period_integrals(params);
    if (pi.S == 0.0) throw InfiniteSyncTime("S = 0: the pulse has no slope");
    return pi.psi / (2.0 * params.jtilde * params.jtilde * params.delta_t * pi.S);
}

double mode_sync_time(std::complex<double> lambda, const TheoryParams& params) {
    if (params.delta_t == 0.0) throw InfiniteSyncTime("no synchronization without delay");
    if (!(params.delta_t > 0.0)) throw InvalidArgument("mode_sync_time: delta_t must be > 0");
    const double growth = (lambda * (params.jtilde - lambda)).real();
    if (growth >= 0.0) throw NonDecayingMode("mode does not decay: Re[lambda (J~ - lambda)] >= 0");
    const PeriodIntegrals pi = period_integrals(params);
    if (pi.S == 0.0) throw InfiniteSyncTime("S = 0: the pulse has no slope");
    return pi.psi / (-growth * params.delta_t * pi.S);
}

ModePrediction make_mode_prediction(std::complex<double> lambda, std::complex<double> amplitude,
                                    const TheoryParams& params) {
    ModePrediction m;
    m.lambda = lambda;
    m.amplitude = amplitude;
    m.decay_rate_sign = (lambda * (params.jtilde - lambda)).real();
    if (m.decay_rate_sign < 0.0 && params.delta_t > 0.0) {
        const PeriodIntegrals pi = period_integrals(params);
        if (pi.S > 0.0) m.tau = pi.psi / (-m.decay_rate_sign * params.delta_t * pi.S);
    }
    return m;
}

LinearPredictor::LinearPredictor(TheoryParams params) : params_(std::move(params)) {
    params_.validate();
    panels_per_period_ = panels_per_period(params_.pulse);
    integrals_ = period_integrals(params_);

    const double xi = params_.pulse.period();
    if (params_.rate_model == MeanRateModel::first_order) {
        const int samples = 16 * panels_per_period_;
        for (int k = 0; k < samples; ++k) {
            const double th = -0.5 * xi + xi * k / samples;
            if (!(params_.linear_rate(th) > 0.0)) {
                std::ostringstream msg;
                msg << "first-order mean rate T is not positive at theta=" << th
                    << "; delta_t is too large for the first-order expansion";
                throw InvalidArgument(msg.str());
            }
        }
    }
    s_linear_ = partial_integral(-0.5 * xi, 0.5 * xi, true);
    rate0_ = params_.linear_rate(params_.mean_phase0);
}

double LinearPredictor::partial_integral(double a, double b, bool linear_rate_density) const {
    const TheoryParams& p = params_;
    if (linear_rate_density)
        return integrate(
            [&](double th) {
                const double d = p.pulse.derivative(th);
                return d * d / p.linear_rate(th);
            },
            a, b, p, panels_per_period_);
    return integrate([&](double th) { return 1.0 / p.mean_rate(th); }, a, b, p,
                     panels_per_period_);
}

double LinearPredictor::mean_phase_time(double theta_bar) const {
    const double theta0 = params_.mean_phase0;
    if (!(theta_bar >= theta0)) throw InvalidArgument("mean_phase_time: theta_bar < theta_bar0");
    const double xi = params_.pulse.period();
    const double periods = std::floor((theta_bar - theta0) / xi);
    return periods * integrals_.psi + partial_integral(theta0 + periods * xi, theta_bar, false);
}

double LinearPredictor::mean_phase_at(double t) const {
    if (!(t >= 0.0)) throw InvalidArgument("mean_phase_at: t must be >= 0");
    const double psi = integrals_.psi;
    const double periods = std::floor(t / psi);
    const double r = t - periods * psi;
    return params_.mean_phase0 + periods * params_.pulse.period() +
           invert_partial_period(params_, params_.mean_phase0, r, psi, panels_per_period_);
}

double LinearPredictor::decay_integral(double theta_bar) const {
    const double theta0 = params_.mean_phase0;
    const double xi = params_.pulse.period();
    const double periods = std::floor((theta_bar - theta0) / xi);
    return periods * s_linear_ + partial_integral(theta0 + periods * xi, theta_bar, true);
}

double LinearPredictor::phi(double t, double phi0) const {
    const double theta_bar = mean_phase_at(t);
    return phi_at({t, theta_bar, decay_integral(theta_bar)}, phi0);
}

double LinearPredictor::phi_at(const Sample& s, double phi0) const {
    const double jt = params_.jtilde;
    const double exponent = -2.0 * params_.delta_t * jt * jt * s.decay_integral;
    return phi0 * (rate0_ / params_.linear_rate(s.mean_phase)) * std::exp(exponent);
}

std::complex<double> LinearPredictor::mode(double t, const ModePrediction& mode) const {
    const double theta_bar = mean_phase_at(t);
    return mode_at({t, theta_bar, decay_integral(theta_bar)}, mode);
}

std::complex<double> LinearPredictor::mode_at(const Sample& s, const ModePrediction& mode) const {
    const double jt = params_.jtilde;
    const std::complex<double> lambda = mode.lambda;

    std::complex<double> log_prefactor;
    if (std::fabs(jt) >= kSmallCoupling) {
        // T > 0, so the principal branch reduces to a real logarithm.
        log_prefactor = (lambda / jt) * std::log(params_.linear_rate(s.mean_phase) / rate0_);
    } else {
        // J~ -> 0 limit of (T/T0)^(lambda/J~).
        auto g = [&](double th) {
            const double v = params_.pulse.value(th);
            if (params_.rate_model == MeanRateModel::leading_order) return v;
            return v - params_.delta_t * params_.omega * params_.pulse.derivative(th);
        };
        log_prefactor = lambda * (g(s.mean_phase) - g(params_.mean_phase0)) / params_.omega;
    }
    const std::complex<double> log_decay =
        lambda * (jt - lambda) * params_.delta_t * s.decay_integral;
    return mode.amplitude * std::exp(log_prefactor + log_decay);
}

std::vector<LinearPredictor::Sample> LinearPredictor::march(const std::vector<double>& times) const {
    std::vector<Sample> out;
    out.reserve(times.size());
    const TheoryParams& p = params_;
    const double xi = p.pulse.period();
    const double max_rate = p.omega + std::max(p.jtilde * p.pulse.value(0.0),
                                               p.jtilde * p.pulse.value(0.5 * xi));
    SimpsonOptions opt = p.quadrature;
    auto small_integral = [&](const std::function<double(double)>& f, double a, double b) {
        if (a == b) return 0.0;
        opt.initial_panels =
            std::max(4, static_cast<int>(std::ceil(panels_per_period_ * std::fabs(b - a) / xi)));
        return integrate_simpson(f, a, b, opt).value;
    };
    auto inv_rate = [&](double th) { return 1.0 / p.mean_rate(th); };
    auto density = [&](double th) {
        const double d = p.pulse.derivative(th);
        return d * d / p.linear_rate(th);
    };

    double t_prev = 0.0;
    double theta_prev = p.mean_phase0;
    double decay_prev = 0.0;
    for (double t : times) {
        if (!(t >= t_prev)) throw InvalidArgument("march: times must be non-decreasing and >= 0");
        const double dt = t - t_prev;
        double theta = theta_prev;
        if (dt > 0.0) {
            double lo = theta_prev, hi = theta_prev + dt * max_rate * (1.0 + 1e-12);
            double x = theta_prev + dt * p.mean_rate(theta_prev);
            for (int it = 0; it < 200; ++it) {
                if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
                const double f = small_integral(inv_rate, theta_prev, x) - dt;
                if (f > 0.0) hi = x;
                else lo = x;
                double next = x - f * p.mean_rate(x);
                if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
                const bool done = std::fabs(next - x) <= 1e-12 || hi - lo <= 1e-12;
                x = next;
                if (done) break;
            }
            theta = x;
        }
        const double decay = decay_prev + small_integral(density, theta_prev, theta);
        out.push_back({t, theta, decay});
        t_prev = t;
        theta_prev = theta;
        decay_prev = decay;
    }
    return out;
}

std::vector<double> LinearPredictor::phi_series(const std::vector<double>& times,
                                                double phi0) const {
    std::vector<double> out;
    for (const Sample& s : march(times)) out.push_back(phi_at(s, phi0));
    return out;
}

std::vector<std::complex<double>> LinearPredictor::mode_series(const std::vector<double>& times,
                                                               const ModePrediction& mode) const {
    std::vector<std::complex<double>> out;
    for (const Sample& s : march(times)) out.push_back(mode_at(s, mode));
    return out;
}

double predict_phi(double t, double phi0, const TheoryParams& params) {
    return LinearPredictor(params).phi(t, phi0);
}

std::complex<double> predict_mode(double t, const ModePrediction& mode,
                                  const TheoryParams& params) {
    return LinearPredictor(params).mode(t, mode);
}

}  // namespace pulsesync
