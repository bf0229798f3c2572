#include "pulsesync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pulsesync/errors.hpp"
#include "pulsesync/format.hpp"

namespace pulsesync {

namespace {

// Integral of the interpolant over [t_k, t_k + s h].
double cell_integral(const SampledSeries& x, std::size_t k, double s) {
    const double h = x.step;
    const double y0 = x.values[k], y1 = x.values[k + 1];
    if (x.rates.empty()) return h * (y0 * s + (y1 - y0) * s * s / 2.0);
    const double d0 = x.rates[k], d1 = x.rates[k + 1];
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
    return h * (y0 * (s4 / 2 - s3 + s) + h * d0 * (s4 / 4 - 2 * s3 / 3 + s2 / 2) +
                y1 * (-s4 / 2 + s3) + h * d1 * (s4 / 4 - s3 / 3));
}

std::vector<double> prefix_integrals(const SampledSeries& x) {
    std::vector<double> p(x.size(), 0.0);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) p[k + 1] = p[k] + cell_integral(x, k, 1.0);
    return p;
}

// Locates t on the grid: cell index and fraction in [0, 1].
std::pair<std::size_t, double> locate(const SampledSeries& x, double t) {
    if (x.size() < 2) throw InvalidArgument("series needs at least two samples");
    const double u = (t - x.t0) / x.step;
    const double last = static_cast<double>(x.size() - 1);
    if (u < -1e-9 || u > last + 1e-9) throw InvalidArgument("time outside the sampled range");
    const double uc = std::clamp(u, 0.0, last);
    std::size_t k = static_cast<std::size_t>(std::floor(uc));
    if (k >= x.size() - 1) k = x.size() - 2;
    return {k, uc - static_cast<double>(k)};
}

double value_in_cell(const SampledSeries& x, std::size_t k, double s) {
    if (x.rates.empty()) return x.values[k] + s * (x.values[k + 1] - x.values[k]);
    return hermite(x.values[k], x.rates[k], x.values[k + 1], x.rates[k + 1], x.step, s).phase;
}

double antiderivative(const SampledSeries& x, const std::vector<double>& prefix, double t) {
    const auto [k, s] = locate(x, t);
    return prefix[k] + cell_integral(x, k, s);
}

// Time at which the (increasing) mean phase equals `target`, searching
// cells from `k` on. Updates k to the cell that holds the root.
double solve_mean_phase(const SampledSeries& m, std::size_t& k, double target) {
    while (k + 2 < m.size() && m.values[k + 1] <= target) ++k;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 64 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (value_in_cell(m, k, mid) < target) lo = mid;
        else hi = mid;
    }
    return m.time(k) + 0.5 * (lo + hi) * m.step;
}

}  // namespace

double SampledSeries::at(double t) const {
    const auto [k, s] = locate(*this, t);
    return value_in_cell(*this, k, s);
}

double SampledSeries::integral(double a, double b) const {
    const std::vector<double> p = prefix_integrals(*this);
    return antiderivative(*this, p, b) - antiderivative(*this, p, a);
}

WindowSeries window_average(const SampledSeries& mean_phase, const SampledSeries& signal,
                            double xi, std::size_t stride) {
    if (mean_phase.size() != signal.size() || mean_phase.step != signal.step ||
        mean_phase.t0 != signal.t0)
        throw InvalidArgument("window_average: series must share one grid");
    if (!(xi > 0.0)) throw InvalidArgument("window_average: xi must be > 0");
    if (stride == 0) stride = 1;
    const std::vector<double> prefix = prefix_integrals(signal);
    WindowSeries out;
    std::size_t cell = 0;
    const double first = mean_phase.values.front();
    for (std::size_t k = 1; k < signal.size(); ++k) {
        const double target = mean_phase.values[k] - xi;
        if (target < first) continue;
        if (k % stride != 0 && k + 1 != signal.size()) continue;
        const double start = solve_mean_phase(mean_phase, cell, target);
        const double t = signal.time(k);
        const double len = t - start;
        if (!(len > 0.0)) continue;
        out.times.push_back(t);
        out.window.push_back(len);
        out.values.push_back((prefix[k] - antiderivative(signal, prefix, start)) / len);
    }
    return out;
}

std::vector<double> perron_weights(const SystemSpec& spec) {
    const SpectralDecomposition sd = spectral_decompose(spec.coupling);
    std::vector<double> w(spec.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = sd.left(sd.perron_index, i).real();
    return w;
}

SampledSeries mean_phase_series(const Trajectory& traj) {
    const std::vector<double> w = perron_weights(traj.spec());
    SampledSeries s;
    s.step = traj.step();
    s.values.resize(traj.nodes());
    s.rates.resize(traj.nodes());
    for (std::size_t k = 0; k < traj.nodes(); ++k) {
        double v = 0.0, r = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            v += w[i] * traj.phase(k, i);
            r += w[i] * traj.rate(k, i);
        }
        s.values[k] = v;
        s.rates[k] = r;
    }
    return s;
}

SampledSeries difference_series(const Trajectory& traj, std::size_t i, std::size_t j) {
    if (i >= traj.oscillators() || j >= traj.oscillators())
        throw InvalidArgument("oscillator index out of range");
    SampledSeries s;
    s.step = traj.step();
    s.values.resize(traj.nodes());
    s.rates.resize(traj.nodes());
    for (std::size_t k = 0; k < traj.nodes(); ++k) {
        s.values[k] = traj.phase(k, i) - traj.phase(k, j);
        s.rates[k] = traj.rate(k, i) - traj.rate(k, j);
    }
    return s;
}

WindowSeries windowed_phase_diff(const Trajectory& traj, std::size_t i, std::size_t j,
                                 std::size_t stride) {
    const SampledSeries m = mean_phase_series(traj);
    const double xi = traj.spec().pulse.period();
    if (m.values.back() - m.values.front() < 2.0 * xi)
        throw TrajectoryTooShort("windowed_phase_diff: trajectory spans less than two periods");
    return window_average(m, difference_series(traj, i, j), xi, stride);
}

SyncTimeEstimate measure_sync_time(const WindowSeries& series, double upper_frac,
                                   double lower_frac) {
    if (series.values.empty()) throw NoDecay("empty series");
    if (!(upper_frac > lower_frac) || !(lower_frac > 0.0))
        throw InvalidArgument("measure_sync_time: need 0 < lower_frac < upper_frac");
    const double v0 = std::fabs(series.values.front());
    if (!(v0 > 0.0)) throw NoDecay("initial windowed value is zero");

    // Band samples up to the first drop below the lower edge or sign change.
    const bool positive = series.values.front() > 0.0;
    std::vector<double> ts, ys;
    for (std::size_t k = 0; k < series.values.size(); ++k) {
        const double v = std::fabs(series.values[k]);
        if (v < lower_frac * v0 || (series.values[k] > 0.0) != positive) break;
        if (v <= upper_frac * v0) {
            ts.push_back(series.times[k]);
            ys.push_back(std::log(v));
        }
    }
    if (ts.size() < 10) throw NoDecay("fewer than 10 samples in the fit band");

    const double n = static_cast<double>(ts.size());
    double st = 0, sy = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sy += ys[k];
    }
    const double tm = st / n, ym = sy / n;
    double stt = 0, sty = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        stt += (ts[k] - tm) * (ts[k] - tm);
        sty += (ts[k] - tm) * (ys[k] - ym);
    }
    if (!(stt > 0.0)) throw NoDecay("degenerate fit window");
    SyncTimeEstimate est;
    est.fit.slope = sty / stt;
    est.fit.intercept = ym - est.fit.slope * tm;
    est.fit.t_begin = ts.front();
    est.fit.t_end = ts.back();
    est.fit.points = ts.size();
    double ss = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double r = ys[k] - (est.fit.intercept + est.fit.slope * ts[k]);
        ss += r * r;
    }
    est.fit.rms = std::sqrt(ss / n);
    if (!(est.fit.slope < 0.0)) throw NoDecay("windowed phase difference does not decay");
    est.tau = -1.0 / est.fit.slope;
    return est;
}

SyncReport strong_sync_check_pair(const Trajectory& traj, std::size_t i, std::size_t j, double tol,
                                  std::size_t windows) {
    const SampledSeries m = mean_phase_series(traj);
    const double xi = traj.spec().pulse.period();
    if (windows == 0) windows = 1;
    if (m.values.back() - m.values.front() < static_cast<double>(windows) * xi)
        throw TrajectoryTooShort("strong_sync_check: final segment shorter than the windows");

    SyncReport r;
    r.i = i;
    r.j = j;
    const std::size_t last = traj.nodes() - 1;
    const double delta = traj.phase(last, i) - traj.phase(last, j);
    r.mu = std::lround(delta / xi);
    r.residual = std::fabs(delta - static_cast<double>(r.mu) * xi);

    // Residuals at the ends of the last windows, oldest first.
    const double scale = std::max({1.0, std::fabs(traj.phase(last, i)),
                                   std::fabs(traj.phase(last, j))});
    std::size_t cell = 0;
    for (std::size_t w = windows; w-- > 1;) {
        const double t = solve_mean_phase(m, cell, m.values.back() - static_cast<double>(w) * xi);
        const double d = traj.history_eval(t, i).phase - traj.history_eval(t, j).phase;
        r.trend.push_back(std::fabs(d - static_cast<double>(r.mu) * xi));
    }
    r.trend.push_back(r.residual);
    bool non_increasing = true;
    for (std::size_t k = 1; k < r.trend.size(); ++k)
        if (r.trend[k] > r.trend[k - 1] + 1e-12 * scale) non_increasing = false;
    r.synced = r.residual < tol && non_increasing;

    try {
        const std::size_t stride = std::max<std::size_t>(1, traj.nodes() / 20000);
        const SyncTimeEstimate est =
            measure_sync_time(window_average(m, difference_series(traj, i, j), xi, stride));
        r.tau_measured = est.tau;
        r.fit = est.fit;
    } catch (const NoDecay&) {
    }
    return r;
}

std::vector<SyncReport> strong_sync_check(const Trajectory& traj, double tol,
                                          std::size_t windows) {
    std::vector<SyncReport> out;
    for (std::size_t i = 0; i < traj.oscillators(); ++i)
        for (std::size_t j = i + 1; j < traj.oscillators(); ++j)
            out.push_back(strong_sync_check_pair(traj, i, j, tol, windows));
    return out;
}

void write_sync_report(std::ostream& out, const SyncReport& r) {
    out << "pair=" << r.i + 1 << ',' << r.j + 1 << '\n';
    out << "tau_measured=" << (r.tau_measured ? format_double(*r.tau_measured) : "none") << '\n';
    out << "mu=" << r.mu << '\n';
    out << "residual=" << format_double(r.residual) << '\n';
    out << "synced=" << (r.synced ? "true" : "false") << '\n';
    if (r.fit) {
        out << "fit_slope=" << format_double(r.fit->slope) << '\n';
        out << "fit_intercept=" << format_double(r.fit->intercept) << '\n';
        out << "fit_window=" << format_double(r.fit->t_begin) << ','
            << format_double(r.fit->t_end) << '\n';
        out << "fit_points=" << r.fit->points << '\n';
        out << "fit_rms=" << format_double(r.fit->rms) << '\n';
    }
}

double refine_peak(std::span<const double> y, std::size_t k, double t0, double h) {
    if (k == 0 || k + 1 >= y.size()) return t0 + static_cast<double>(k) * h;
    const double denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
    const double offset = denom != 0.0 ? 0.5 * (y[k - 1] - y[k + 1]) / denom : 0.0;
    return t0 + (static_cast<double>(k) + std::clamp(offset, -0.5, 0.5)) * h;
}

namespace {

std::vector<std::size_t> discrete_maxima(const std::vector<double>& y, double threshold) {
    std::vector<std::size_t> out;
    for (std::size_t k = 1; k + 1 < y.size(); ++k)
        if (y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] >= threshold) out.push_back(k);
    return out;
}

std::optional<double> half_width(const std::vector<double>& y, std::size_t k, double h) {
    const double half = 0.5 * y[k];
    std::size_t a = k, b = k;
    while (a > 0 && y[a] >= half) --a;
    while (b + 1 < y.size() && y[b] >= half) ++b;
    if (y[a] >= half || y[b] >= half) return std::nullopt;
    const double left = static_cast<double>(a) + (half - y[a]) / (y[a + 1] - y[a]);
    const double right = static_cast<double>(b - 1) + (y[b - 1] - half) / (y[b - 1] - y[b]);
    return (right - left) * h;
}

}  // namespace

MechanismSeries mechanism_series(const Trajectory& traj) {
    const std::size_t n = traj.oscillators();
    const std::size_t nodes = traj.nodes();
    const double h = traj.step();
    const PulseFunction& pulse = traj.spec().pulse;
    MechanismSeries out;
    out.times.resize(nodes);
    out.sigma.assign(n, std::vector<double>(nodes));
    out.rate.assign(n, std::vector<double>(nodes));
    out.peaks.resize(n);
    for (std::size_t k = 0; k < nodes; ++k) {
        out.times[k] = traj.time(k);
        for (std::size_t i = 0; i < n; ++i) {
            out.sigma[i][k] = pulse.value(traj.phase(k, i));
            out.rate[i][k] = traj.rate(k, i);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto& sig = out.sigma[i];
        const auto& rate = out.rate[i];
        const double smax = *std::max_element(sig.begin(), sig.end());
        const auto [rmin_it, rmax_it] = std::minmax_element(rate.begin(), rate.end());
        const bool flat_rate = *rmax_it - *rmin_it <= 1e-12 * std::fabs(*rmax_it);
        const auto sig_peaks = discrete_maxima(sig, 0.5 * smax);
        std::vector<double> rate_peak_times;
        if (!flat_rate)
            for (std::size_t k : discrete_maxima(rate, *rmin_it + 0.5 * (*rmax_it - *rmin_it)))
                rate_peak_times.push_back(refine_peak(rate, k, 0.0, h));

        for (std::size_t p = 0; p < sig_peaks.size(); ++p) {
            PeakPair pp;
            pp.sigma_peak = refine_peak(sig, sig_peaks[p], 0.0, h);
            pp.fwhm = half_width(sig, sig_peaks[p], h);
            // Half the spacing to the neighboring sigma peaks bounds the match.
            double reach = std::numeric_limits<double>::infinity();
            if (p > 0) reach = std::min(reach, 0.5 * (pp.sigma_peak - traj.time(sig_peaks[p - 1])));
            if (p + 1 < sig_peaks.size())
                reach = std::min(reach, 0.5 * (traj.time(sig_peaks[p + 1]) - pp.sigma_peak));
            double best = std::numeric_limits<double>::infinity();
            for (double tr : rate_peak_times)
                if (std::fabs(tr - pp.sigma_peak) < std::fabs(best)) best = tr - pp.sigma_peak;
            if (std::isfinite(best) && std::fabs(best) <= reach) pp.offset = best;
            out.peaks[i].push_back(pp);
        }
    }
    return out;
}

void write_window_csv(std::ostream& out, const WindowSeries& series) {
    out << "t,value\n";
    for (std::size_t k = 0; k < series.times.size(); ++k)
        out << format_double(series.times[k]) << ',' << format_double(series.values[k]) << '\n';
}

void write_mechanism_csv(std::ostream& out, const MechanismSeries& series, std::size_t stride) {
    if (stride == 0) stride = 1;
    const std::size_t n = series.sigma.size();
    out << "t";
    for (std::size_t i = 1; i <= n; ++i) out << ",sigma_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",rate_" << i;
    out << '\n';
    for (std::size_t k = 0; k < series.times.size(); k += stride) {
        out << format_double(series.times[k]);
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(series.sigma[i][k]);
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(series.rate[i][k]);
        out << '\n';
    }
}

}  // namespace pulsesync
