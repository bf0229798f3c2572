// One PASS/FAIL line per acceptance criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pulsesync/analysis.hpp"
#include "pulsesync/dde.hpp"
#include "pulsesync/dirac.hpp"
#include "pulsesync/errors.hpp"
#include "pulsesync/experiments.hpp"
#include "pulsesync/lintheory.hpp"
#include "pulsesync/network.hpp"
#include "pulsesync/pulse.hpp"
#include "pulsesync/quadrature.hpp"
#include "pulsesync/rng.hpp"

using namespace pulsesync;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

TheoryParams fig2_theory(double delta_t) {
    TwoOscillatorSetup s;
    s.delta_t = delta_t;
    return s.theory();
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxy / sxx;
}

void psi_reproduction(Outcome& o) {
    const PeriodIntegrals pi = period_integrals(fig2_theory(0.01));
    o.detail << "psi=" << pi.psi;
    o.check(std::abs(pi.psi - 0.3934) <= 0.0005, "psi outside 0.3934 +- 0.0005");
}

// Pointwise agreement up to the first time the windowed envelope of the full
// solution has fallen by `factor`.
void compare_until_decay(Outcome& o, double delta_t, double factor, double tol,
                         const std::string& label) {
    TwoOscillatorSetup s;
    s.delta_t = delta_t;
    const TheoryParams theory = s.theory();
    const double psi = period_integrals(theory).psi;
    const double t_end = 2.0 * psi + sync_time_two(theory) * std::log(factor) * 3.0;
    const PhiComparison cmp = compare_phi(s, t_end);

    SampledSeries mean, diff;
    mean.step = diff.step = cmp.t[1] - cmp.t[0];
    const LinearPredictor pred(theory);
    for (std::size_t k = 0; k < cmp.t.size(); ++k) {
        mean.values.push_back(pred.mean_phase_at(cmp.t[k]));
        diff.values.push_back(cmp.phi_full[k]);
    }
    const WindowSeries win = window_average(mean, diff, s.xi);
    double horizon = -1.0;
    for (std::size_t k = 0; k < win.times.size(); ++k)
        if (std::abs(win.values[k]) <= std::abs(win.values[0]) / factor) {
            horizon = win.times[k];
            break;
        }
    o.check(horizon > 0.0, label + ": envelope never fell by the factor");
    double worst = 0.0;
    for (std::size_t k = 0; k < cmp.t.size() && cmp.t[k] <= horizon; ++k)
        worst = std::max(worst, std::abs(cmp.phi_linear[k] - cmp.phi_full[k]) /
                                    std::abs(cmp.phi_full[k]));
    o.detail << label << ": horizon=" << horizon << " max_rel=" << worst << " ("
             << (cmp.rate_model == MeanRateModel::first_order ? "first_order" : "leading_order")
             << ") ";
    o.check(worst <= tol, label + ": relative deviation above " + std::to_string(tol));
}

void linear_vs_full(Outcome& o) {
    compare_until_decay(o, 0.01, 10.0, 0.05, "main");
    compare_until_decay(o, 0.1, 3.0, 0.20, "inset");
}

void sync_time_law(Outcome& o) {
    std::vector<double> lx, ly;
    for (double dt : {0.005, 0.01, 0.02, 0.04}) {
        TwoOscillatorSetup s;
        s.delta_t = dt;
        const DelayPoint p = sync_time_point(s);
        o.check(p.tau_full.has_value(), "no decay fit at delta_t=" + std::to_string(dt));
        if (!p.tau_full) continue;
        const double rel = *p.tau_full / p.tau_formula - 1.0;
        o.detail << "dt=" << dt << " tau=" << *p.tau_full << " formula=" << p.tau_formula
                 << " rel=" << rel << "; ";
        o.check(std::abs(rel) <= 0.2, "tau off by more than 20% at delta_t=" + std::to_string(dt));
        lx.push_back(std::log(dt));
        ly.push_back(std::log(*p.tau_full));
    }
    if (lx.size() >= 2) {
        const double exponent = slope(lx, ly);
        o.detail << "exponent=" << exponent;
        o.check(std::abs(exponent + 1.0) <= 0.1, "power-law exponent outside -1 +- 0.1");
    }
}

void no_sync_without_delay(Outcome& o) {
    TwoOscillatorSetup s;
    s.delta_t = 0.0;
    const double psi = period_integrals(s.theory()).psi;
    Rk4Options opt;
    opt.verify_halving = false;
    const Trajectory traj = integrate_rk4(s.system(), s.initial_phases(), 50.0 * psi,
                                          default_step(psi, 0.0), opt);
    const WindowSeries win = windowed_phase_diff(traj, 0, 1);
    bool no_decay = false;
    try {
        measure_sync_time(win);
    } catch (const NoDecay&) {
        no_decay = true;
    }
    o.check(no_decay, "RK4 at delta_t=0 produced a decay fit");
    double drift = 0.0;
    for (double v : win.values) drift = std::max(drift, std::abs(v - win.values[0]));
    drift /= std::abs(win.values[0]);
    o.detail << "rk4_window_drift=" << drift << ' ';
    o.check(drift < 1e-4, "windowed drift >= 1e-4");

    DiracParams dp;
    dp.delta_t = 0.0;
    const EventTrajectory ev = simulate_dirac(dp, {0.6, 0.3}, 101.0);
    const auto& fire = ev.emissions(0);
    double worst = 0.0;
    const double d0 = ev.phase(0, fire.front()) - ev.phase(1, fire.front());
    for (double t : fire) worst = std::max(worst, std::abs(ev.phase(0, t) - ev.phase(1, t) - d0));
    o.detail << "dirac_boundary_drift=" << worst << " periods=" << fire.size();
    o.check(fire.size() >= 100, "fewer than 100 periods");
    o.check(worst <= 1e-12, "Dirac boundary difference drifted above 1e-12");
}

void euler_spurious(Outcome& o) {
    TwoOscillatorSetup s;
    s.delta_t = 0.0;
    const TheoryParams theory = s.theory();
    const PeriodIntegrals pi = period_integrals(theory);
    std::vector<double> taus;
    for (double h : {0.01, 0.005}) {
        // Effective lag of order h: budget for a decay below the fit band.
        const double tau_guess = pi.psi / (2.0 * 0.5 * h * pi.S);
        const double t_end = 2.0 * pi.psi + 8.0 * tau_guess;
        const Trajectory traj = integrate_euler_forward(s.system(), s.initial_phases(), t_end, h);
        try {
            const double tau = measure_sync_time(windowed_phase_diff(traj, 0, 1)).tau;
            taus.push_back(tau);
            o.detail << "h=" << h << " tau=" << tau << "; ";
        } catch (const NoDecay&) {
            o.check(false, "no measurable decay at h=" + std::to_string(h));
        }
    }
    if (taus.size() == 2) {
        const double ratio = taus[1] / taus[0];
        o.detail << "ratio=" << ratio;
        o.check(ratio >= 1.7 && ratio <= 2.3, "tau ratio outside [1.7, 2.3]");
    }
}

// Parameters with positive rates for both signs of a at n up to 8.
SystemSpec network_system(const CouplingMatrix& coupling) {
    return SystemSpec(PulseFunction::gaussian_comb({1.01, 0.2, 20}), coupling, 20.0, 0.0025);
}

void network_case(Outcome& o, const SystemSpec& spec, double expected_growth,
                  bool measure_modes, const std::string& label) {
    const std::size_t n = spec.size();
    const SpectralDecomposition sd = spectral_decompose(spec.coupling);
    const TheoryParams theory = make_theory(spec, 0.5 * spec.pulse.period(),
                                            MeanRateModel::leading_order);
    double tau_max = 0.0;
    for (const ModeStability& m : classify_stability(sd)) {
        if (!std::isnan(expected_growth))
            o.check(std::abs(m.growth - expected_growth) <= 1e-9,
                    label + ": growth " + std::to_string(m.growth));
        o.check(m.verdict == ModeVerdict::synchronizing, label + ": mode not synchronizing");
        tau_max = std::max(tau_max, mode_sync_time(m.lambda, theory));
    }
    SplitMix64 rng(2024 + n);
    std::vector<double> theta0(n);
    for (double& th : theta0) th = 0.5 * spec.pulse.period() + 0.02 * (2.0 * rng.uniform() - 1.0);
    const double psi = period_integrals(theory).psi;
    Rk4Options opt;
    opt.verify_halving = false;
    // The sync check needs a few trailing windows past 10 tau.
    const Trajectory traj = integrate_rk4(spec, theta0, std::max(10.0 * tau_max, 8.0 * psi),
                                          default_step(psi, spec.delta_t), opt);
    double worst = 0.0;
    bool all = true;
    for (const SyncReport& r : strong_sync_check(traj, 1e-3 * spec.pulse.period())) {
        worst = std::max(worst, r.residual);
        all = all && r.synced;
    }
    o.check(all, label + ": not strongly synchronized");
    o.detail << label << ": tau=" << tau_max << " residual=" << worst;
    if (measure_modes) {
        // Mean-field: every difference lies in the degenerate non-Perron space.
        const double tau = measure_sync_time(windowed_phase_diff(traj, 0, 1)).tau;
        const double rel = tau / tau_max - 1.0;
        o.detail << " measured=" << tau << " rel=" << rel;
        o.check(std::abs(rel) <= 0.25, label + ": mode time off by more than 25%");
    }
    o.detail << "; ";
}

void network_stability(Outcome& o) {
    for (double a : {1.0, -1.0})
        for (std::size_t n : {2, 3, 4, 8}) {
            const SystemSpec spec = network_system(make_all_to_all(n, a));
            network_case(o, spec, -static_cast<double>(n) * a * a, true,
                         "n=" + std::to_string(n) + ",a=" + (a > 0 ? "1" : "-1"));
        }
    const SystemSpec ring(PulseFunction::gaussian_comb({1.01, 0.1, 20}), make_ring_laplacian(4, 1.0),
                          2.0, 0.01);
    network_case(o, ring, std::nan(""), false, "ring4");
}

int sign_changes(const EventTrajectory& ev, double t_end) {
    int changes = 0;
    double prev = 0.0;
    for (double t = 0.0; t <= t_end; t += 0.001) {
        const double d = ev.phase(0, t) - ev.phase(1, t);
        if (prev != 0.0 && d != 0.0 && (d > 0.0) != (prev > 0.0)) ++changes;
        if (d != 0.0) prev = d;
    }
    return changes;
}

void leapfrogging(Outcome& o) {
    DiracParams dp;
    dp.omega = 1.0;
    dp.jump = 0.1;
    dp.delta_t = 0.5;
    const EventTrajectory delayed = simulate_dirac(dp, {0.6, 0.3}, 20.0);
    dp.delta_t = 0.0;
    const EventTrajectory instant = simulate_dirac(dp, {0.6, 0.3}, 20.0);
    const int a = sign_changes(delayed, 20.0);
    const int b = sign_changes(instant, 20.0);
    o.detail << "sign_changes delayed=" << a << " instantaneous=" << b;
    o.check(a >= 1, "no leapfrogging with delay");
    o.check(b == 0, "leapfrogging without delay");
}

void property_spot_checks(Outcome& o) {
    // Quadrature against a closed form.
    const double q = integrate_simpson([](double x) { return std::exp(x); }, 0.0, 1.0).value;
    o.check(std::abs(q - (std::exp(1.0) - 1.0)) <= 1e-10, "Simpson oracle");

    // Eigen residuals on a random row-normalizable matrix.
    SplitMix64 rng(7);
    const std::size_t n = 12;
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) row += (m(i, j) = rng.uniform());
        m(i, i) = 3.0 - row;
    }
    const SpectralDecomposition sd = spectral_decompose(CouplingMatrix(m));
    const ComplexMatrix jc = to_complex(m);
    double res = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += jc(i, j) * sd.right(j, k);
            res = std::max(res, std::abs(s - sd.eigenvalues[k] * sd.right(i, k)));
        }
    o.detail << "eig_residual=" << res << ' ';
    o.check(res <= 1e-10, "eigen residual");

    // RK4 order on a delayed test problem.
    const SystemSpec spec(PulseFunction::gaussian_comb({1.0, 0.2, 20}), make_all_to_all(2, 0.5),
                          1.0, 0.1);
    const std::vector<double> th0{0.3, 0.1};
    Rk4Options opt;
    opt.verify_halving = false;
    auto final_diff = [&](double h) {
        const Trajectory t = integrate_rk4(spec, th0, 2.0, h, opt);
        return t.phase(t.nodes() - 1, 0) - t.phase(t.nodes() - 1, 1);
    };
    const double ref = final_diff(0.1 / 256);
    const double e1 = std::abs(final_diff(0.1 / 8) - ref);
    const double e2 = std::abs(final_diff(0.1 / 16) - ref);
    const double order = std::log2(e1 / e2);
    o.detail << "rk4_order=" << order << ' ';
    o.check(order >= 3.5, "RK4 order below 3.5");

    // Hermite exactness on a cubic.
    auto cubic = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 0.25 * x * x * x; };
    auto dcubic = [](double x) { return -2.0 + x + 0.75 * x * x; };
    double herr = 0.0;
    for (double s = 0.0; s <= 1.0; s += 0.125) {
        const PhaseRate pr = hermite(cubic(0.4), dcubic(0.4), cubic(0.7), dcubic(0.7), 0.3, s);
        herr = std::max(herr, std::abs(pr.phase - cubic(0.4 + 0.3 * s)));
    }
    o.check(herr <= 1e-14, "Hermite cubic exactness");

    // n = 2 mode prediction against the two-oscillator formula.
    const TheoryParams tp = fig2_theory(0.01);
    const ModePrediction mp = make_mode_prediction(-1.0, 0.05, tp);
    double mode_gap = 0.0;
    for (double t = 0.0; t <= 3.0; t += 0.05)
        mode_gap = std::max(mode_gap, std::abs(predict_mode(t, mp, tp) - predict_phi(t, 0.05, tp)));
    o.detail << "mode_vs_phi=" << mode_gap << ' ';
    o.check(mode_gap <= 1e-6, "predict_mode differs from predict_phi");

    // Small-coupling limit.
    TheoryParams a = tp, b = tp;
    a.jtilde = 1e-6;
    b.jtilde = 0.0;
    const ModePrediction ma = make_mode_prediction(-0.5e-6, 0.05, a);
    const ModePrediction mb = make_mode_prediction(0.0, 0.05, b);
    double lim = 0.0;
    for (double t = 0.0; t <= 3.0; t += 0.05)
        lim = std::max(lim, std::abs(predict_mode(t, ma, a) - predict_mode(t, mb, b)));
    o.detail << "small_coupling_gap=" << lim;
    o.check(lim <= 1e-4, "J~ -> 0 limit");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"psi reproduction", psi_reproduction},
        {"linear vs full agreement", linear_vs_full},
        {"synchronization-time law", sync_time_law},
        {"no synchronization without delay", no_sync_without_delay},
        {"spurious Euler synchronization", euler_spurious},
        {"network stability", network_stability},
        {"leapfrogging", leapfrogging},
        {"property spot checks", property_spot_checks},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[k].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %zu: %s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", k + 1,
                    criteria[k].first.c_str(), secs, o.detail.str().c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
