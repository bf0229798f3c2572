#include "pulsesync/dde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "pulsesync/errors.hpp"
#include "pulsesync/format.hpp"

namespace pulsesync {

SystemSpec::SystemSpec(PulseFunction pulse_, CouplingMatrix coupling_, double omega_,
                       double delta_t_)
    : SystemSpec(std::move(pulse_), std::move(coupling_), std::vector<double>{omega_},
                 delta_t_) {}

SystemSpec::SystemSpec(PulseFunction pulse_, CouplingMatrix coupling_,
                       std::vector<double> omega_, double delta_t_)
    : pulse(std::move(pulse_)),
      coupling(std::move(coupling_)),
      omega(std::move(omega_)),
      delta_t(delta_t_) {
    validate();
}

bool SystemSpec::uniform_omega() const noexcept {
    return std::all_of(omega.begin(), omega.end(), [&](double w) { return w == omega[0]; });
}

void SystemSpec::validate() const {
    if (!(delta_t >= 0.0) || !std::isfinite(delta_t))
        throw InvalidArgument("delta_t must be finite and >= 0");
    if (omega.empty() || (omega.size() != 1 && omega.size() != coupling.size()))
        throw InvalidArgument("omega must have one entry or one per oscillator");
    for (double w : omega)
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("omega entries must be > 0");
}

Trajectory::Trajectory(SystemSpec spec, std::vector<double> theta0, HistoryPolicy policy,
                       double step)
    : spec_(std::move(spec)),
      theta0_(std::move(theta0)),
      policy_(policy),
      step_(step),
      n_(spec_.size()) {
    if (theta0_.size() != n_) throw InvalidArgument("initial phases: expected one per oscillator");
    if (!(step_ > 0.0)) throw InvalidArgument("step must be > 0");
    for (double th : theta0_)
        if (!std::isfinite(th)) throw InvalidArgument("initial phases must be finite");
}

Trajectory Trajectory::from_samples(SystemSpec spec, double step, std::vector<double> phases,
                                    std::vector<double> rates, HistoryPolicy policy) {
    const std::size_t n = spec.size();
    if (phases.empty() || phases.size() % n != 0 || rates.size() != phases.size())
        throw InvalidArgument("from_samples: phases/rates must hold whole rows of n values");
    std::vector<double> theta0(phases.begin(), phases.begin() + static_cast<std::ptrdiff_t>(n));
    Trajectory traj(std::move(spec), std::move(theta0), policy, step);
    traj.phases_ = std::move(phases);
    traj.rates_ = std::move(rates);
    return traj;
}

void Trajectory::append(std::span<const double> phases, std::span<const double> rates) {
    if (phases.size() != n_ || rates.size() != n_)
        throw InvalidArgument("append: expected one value per oscillator");
    phases_.insert(phases_.end(), phases.begin(), phases.end());
    rates_.insert(rates_.end(), rates.begin(), rates.end());
}

void Trajectory::set_rates(std::size_t k, std::span<const double> rates) {
    std::copy(rates.begin(), rates.end(), rates_.begin() + static_cast<std::ptrdiff_t>(k * n_));
}

PhaseRate Trajectory::pre_initial(double t, std::size_t i) const {
    switch (policy_) {
        case HistoryPolicy::constant_rate:
            return {theta0_[i] + spec_.omega_of(i) * t, spec_.omega_of(i)};
        case HistoryPolicy::frozen: return {theta0_[i], 0.0};
    }
    return {theta0_[i], 0.0};
}

PhaseRate hermite(double y0, double d0, double y1, double d1, double h, double s) {
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const double value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    const double dh00 = 6 * s2 - 6 * s;
    const double dh10 = 3 * s2 - 4 * s + 1;
    const double dh01 = -6 * s2 + 6 * s;
    const double dh11 = 3 * s2 - 2 * s;
    const double rate = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
    return {value, rate};
}

PhaseRate Trajectory::history_eval(double t, std::size_t i) const {
    if (i >= n_) throw InvalidArgument("history_eval: oscillator index out of range");
    if (!std::isfinite(t)) throw HistoryRangeError("history_eval: non-finite time");
    if (t < 0.0) return pre_initial(t, i);
    const std::size_t last = nodes() - 1;
    const double x = t / step_;
    if (x > static_cast<double>(last)) {
        if (t <= end_time()) return {phase(last, i), rate(last, i)};
        throw HistoryRangeError("history_eval: t beyond the end of the trajectory");
    }
    std::size_t k = static_cast<std::size_t>(x);
    if (k >= last) return {phase(last, i), rate(last, i)};
    const double s = (t - time(k)) / step_;
    if (s <= 0.0) return {phase(k, i), rate(k, i)};
    if (s >= 1.0) return {phase(k + 1, i), rate(k + 1, i)};
    return hermite(phase(k, i), rate(k, i), phase(k + 1, i), rate(k + 1, i), step_, s);
}

PhaseRate history_eval(const Trajectory& traj, double t, std::size_t i) {
    return traj.history_eval(t, i);
}

double resolve_step(double delta_t, double h_req) {
    if (!(h_req > 0.0) || !std::isfinite(h_req)) throw InvalidArgument("step must be > 0");
    if (delta_t == 0.0) return h_req;
    const double m = std::max(4.0, std::ceil(delta_t / h_req * (1.0 - 1e-12)));
    return delta_t / m;
}

namespace {

std::size_t delay_steps(const SystemSpec& spec, double h) {
    if (spec.delta_t == 0.0) return 0;
    return static_cast<std::size_t>(std::llround(spec.delta_t / h));
}

std::size_t steps_to(double t_end, double h) {
    const double x = t_end / h;
    const double r = std::round(x);
    if (std::fabs(x - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

void coupled_rates(const SystemSpec& spec, std::span<const double> sig, std::span<double> out) {
    const std::size_t n = spec.size();
    const RealMatrix& j = spec.coupling.weights();
    for (std::size_t i = 0; i < n; ++i) {
        double s = spec.omega_of(i);
        for (std::size_t k = 0; k < n; ++k) s += j(i, k) * sig[k];
        out[i] = s;
    }
}

// sigma(theta_j(t_k - delta_t)) at node k with m = delta_t / h.
void delayed_sigma_node(const Trajectory& traj, std::size_t k, std::size_t m,
                        std::span<double> out) {
    const SystemSpec& spec = traj.spec();
    for (std::size_t j = 0; j < traj.oscillators(); ++j) {
        const double th = k >= m ? traj.phase(k - m, j)
                                 : traj.history_eval(traj.time(k) - spec.delta_t, j).phase;
        out[j] = spec.pulse.value(th);
    }
}

void check_monotone(const Trajectory& traj, std::size_t k, std::span<const double> next) {
    for (std::size_t i = 0; i < next.size(); ++i)
        if (!(next[i] > traj.phase(k, i))) {
            std::ostringstream msg;
            msg << "phase of oscillator " << i << " failed to increase at t=" << traj.time(k + 1)
                << "; reduce the step";
            throw StepTooLarge(msg.str());
        }
}

void advance_rk4(Trajectory& traj, std::size_t target_nodes) {
    const SystemSpec& spec = traj.spec();
    const std::size_t n = traj.oscillators();
    const double h = traj.step();
    const std::size_t m = delay_steps(spec, h);
    std::vector<double> sig(n), mid(n), next(n), rates(n), stage(n), k2(n), k3(n), k4(n);

    while (traj.nodes() < target_nodes) {
        const std::size_t k = traj.nodes() - 1;
        auto cur = traj.phases(k);
        auto f0 = traj.rates(k);
        if (m == 0) {
            for (std::size_t i = 0; i < n; ++i) stage[i] = cur[i] + 0.5 * h * f0[i];
            for (std::size_t i = 0; i < n; ++i) sig[i] = spec.pulse.value(stage[i]);
            coupled_rates(spec, sig, k2);
            for (std::size_t i = 0; i < n; ++i) stage[i] = cur[i] + 0.5 * h * k2[i];
            for (std::size_t i = 0; i < n; ++i) sig[i] = spec.pulse.value(stage[i]);
            coupled_rates(spec, sig, k3);
            for (std::size_t i = 0; i < n; ++i) stage[i] = cur[i] + h * k3[i];
            for (std::size_t i = 0; i < n; ++i) sig[i] = spec.pulse.value(stage[i]);
            coupled_rates(spec, sig, k4);
            for (std::size_t i = 0; i < n; ++i)
                next[i] = cur[i] + h / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            for (std::size_t i = 0; i < n; ++i) sig[i] = spec.pulse.value(next[i]);
            coupled_rates(spec, sig, rates);
        } else {
            // The right-hand side only sees delayed phases, so stages 2 and 3
            // coincide and the step is Simpson's rule over the history.
            const double t_mid = traj.time(k) + 0.5 * h - spec.delta_t;
            for (std::size_t j = 0; j < n; ++j) {
                double th;
                if (t_mid < 0.0) {
                    th = traj.history_eval(t_mid, j).phase;
                } else {
                    const std::size_t a = k - m;
                    th = hermite(traj.phase(a, j), traj.rate(a, j), traj.phase(a + 1, j),
                                 traj.rate(a + 1, j), h, 0.5)
                             .phase;
                }
                sig[j] = spec.pulse.value(th);
            }
            coupled_rates(spec, sig, mid);
            delayed_sigma_node(traj, k + 1, m, sig);
            coupled_rates(spec, sig, rates);
            for (std::size_t i = 0; i < n; ++i)
                next[i] = cur[i] + h / 6.0 * (f0[i] + 4.0 * mid[i] + rates[i]);
        }
        check_monotone(traj, k, next);
        traj.append(next, rates);
    }
}

Trajectory start_trajectory(const SystemSpec& spec, std::span<const double> theta0,
                            HistoryPolicy policy, double h) {
    spec.validate();
    Trajectory traj(spec, std::vector<double>(theta0.begin(), theta0.end()), policy, h);
    const std::size_t n = spec.size();
    std::vector<double> sig(n), rates(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double th = spec.delta_t == 0.0 ? theta0[j]
                                              : traj.history_eval(-spec.delta_t, j).phase;
        sig[j] = spec.pulse.value(th);
    }
    coupled_rates(spec, sig, rates);
    traj.append(theta0, rates);
    return traj;
}

}  // namespace

Trajectory integrate_rk4(const SystemSpec& spec, std::span<const double> theta0, double t_end,
                         double h_req, const Rk4Options& options) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be > 0");
    const double h = resolve_step(spec.delta_t, h_req);
    Trajectory traj = start_trajectory(spec, theta0, options.policy, h);
    advance_rk4(traj, steps_to(t_end, h) + 1);

    if (options.verify_halving) {
        Trajectory fine = start_trajectory(spec, theta0, options.policy, h / 2);
        advance_rk4(fine, 2 * (traj.nodes() - 1) + 1);
        const std::size_t a = traj.nodes() - 1, b = fine.nodes() - 1;
        for (std::size_t i = 0; i < traj.oscillators(); ++i) {
            const double coarse = traj.phase(a, i);
            const double diff = std::fabs(coarse - fine.phase(b, i));
            if (diff > options.halving_rtol * std::max(1.0, std::fabs(coarse))) {
                std::ostringstream msg;
                msg << "step halving changed theta_" << i << "(t_end) by " << diff;
                throw StepTooLarge(msg.str());
            }
        }
    }
    return traj;
}

void continue_rk4(Trajectory& traj, double t_end) {
    if (!(t_end >= traj.end_time())) throw InvalidArgument("continue_rk4: t_end before grid end");
    advance_rk4(traj, steps_to(t_end, traj.step()) + 1);
}

Trajectory integrate_euler_forward(const SystemSpec& spec, std::span<const double> theta0,
                                   double t_end, double h) {
    if (spec.delta_t != 0.0) throw InvalidArgument("forward Euler is only defined for delta_t = 0");
    if (!(h > 0.0)) throw InvalidArgument("step must be > 0");
    if (!(t_end > 0.0)) throw InvalidArgument("t_end must be > 0");
    Trajectory traj = start_trajectory(spec, theta0, HistoryPolicy::constant_rate, h);
    const std::size_t n = spec.size();
    const std::size_t target = steps_to(t_end, h) + 1;
    std::vector<double> next(n), sig(n), rates(n);
    while (traj.nodes() < target) {
        const std::size_t k = traj.nodes() - 1;
        auto cur = traj.phases(k);
        auto f = traj.rates(k);
        for (std::size_t i = 0; i < n; ++i) next[i] = cur[i] + h * f[i];
        for (std::size_t i = 0; i < n; ++i) sig[i] = spec.pulse.value(next[i]);
        coupled_rates(spec, sig, rates);
        check_monotone(traj, k, next);
        traj.append(next, rates);
    }
    return traj;
}

std::vector<double> rhs_at_node(const Trajectory& traj, std::size_t k) {
    const SystemSpec& spec = traj.spec();
    const std::size_t n = traj.oscillators();
    std::vector<double> sig(n), out(n);
    for (std::size_t j = 0; j < n; ++j)
        sig[j] = spec.pulse.value(traj.history_eval(traj.time(k) - spec.delta_t, j).phase);
    coupled_rates(spec, sig, out);
    return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride) {
    if (stride == 0) stride = 1;
    const std::size_t n = traj.oscillators();
    out << "t";
    for (std::size_t i = 1; i <= n; ++i) out << ",theta_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",dtheta_" << i;
    out << '\n';
    const std::size_t last = traj.nodes() - 1;
    auto row = [&](std::size_t k) {
        out << format_double(traj.time(k));
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(traj.phase(k, i));
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(traj.rate(k, i));
        out << '\n';
    };
    for (std::size_t k = 0; k < last; k += stride) row(k);
    row(last);
}

}  // namespace pulsesync
