#include "pulsesync/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pulsesync/dirac.hpp"
#include "pulsesync/errors.hpp"
#include "pulsesync/format.hpp"
#include "pulsesync/rng.hpp"

namespace pulsesync {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

const ConfigEntries& base_defaults() {
    static const ConfigEntries d = {
        {"n", "2"},
        {"coupling", "all_to_all"},
        {"coupling_a", "1"},
        {"coupling_csv", ""},
        {"pulse", "gaussian"},
        {"pulse_level", "0"},
        {"omega", "2"},
        {"xi", "1.01"},
        {"w", "0.1"},
        {"comb_range", "20"},
        {"delta_t", "0.01"},
        {"integrator", "rk4"},
        {"history", "constant_rate"},
        {"h", "auto"},
        {"t_end", "auto"},
        {"verify_halving", "false"},
        {"halving_rtol", "1e-8"},
        {"init", "auto"},
        {"theta0", ""},
        {"phi0", "0.05"},
        {"mean_phase0", "auto"},
        {"init_spread", "0.02"},
        {"seed", "1"},
        {"rate_model", "auto"},
        {"sync_tol", "auto"},
        {"fit_upper", "0.9"},
        {"fit_lower", "0.01"},
        {"delays", "0.005,0.01,0.02,0.04"},
        {"inset_delta_t", "0.1"},
        {"samples", "400"},
        {"csv_stride", "1"},
        {"dirac_omega", "1"},
        {"dirac_jump", "0.1"},
        {"dirac_delta_t", "0.5"},
        {"dirac_theta0", "0.6,0.3"},
        {"dirac_t_end", "20"},
        {"dirac_sample_dt", "0.01"},
        {"dirac_max_events", "100000"},
        {"row_sum_tol", "1e-10"},
        {"max_condition", "1e12"},
        {"cluster_tol", "1e-10"},
        {"marginal_tol", "1e-12"},
    };
    return d;
}

ConfigEntries kind_defaults(const std::string& kind) {
    ConfigEntries d = base_defaults();
    if (kind == "fig3") {
        // Log grid over [0.002, 0.1].
        std::ostringstream grid;
        const int points = 8;
        for (int k = 0; k < points; ++k) {
            const double v = 0.002 * std::pow(0.1 / 0.002, static_cast<double>(k) / (points - 1));
            grid << (k ? "," : "") << format_double(std::round(v * 1e6) / 1e6);
        }
        d["delays"] = grid.str();
    }
    if (kind == "spectrum") d["n"] = "4";
    return d;
}

NetworkTolerances network_tolerances(const ExperimentConfig& c) {
    NetworkTolerances t;
    t.row_sum_rel = c.number("row_sum_tol");
    t.max_condition = c.number("max_condition");
    t.cluster_rel = c.number("cluster_tol");
    t.marginal_abs = c.number("marginal_tol");
    return t;
}

MeanRateModel parse_rate_model(const std::string& s) {
    if (s == "first_order") return MeanRateModel::first_order;
    if (s == "leading_order") return MeanRateModel::leading_order;
    throw ConfigError("rate_model: expected first_order, leading_order or auto, got '" + s + "'");
}

std::string rate_model_name(MeanRateModel m) {
    return m == MeanRateModel::first_order ? "first_order" : "leading_order";
}

HistoryPolicy parse_history(const std::string& s) {
    if (s == "constant_rate") return HistoryPolicy::constant_rate;
    if (s == "frozen") return HistoryPolicy::frozen;
    throw ConfigError("history: expected constant_rate or frozen, got '" + s + "'");
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

}  // namespace

ConfigEntries parse_config_text(const std::string& text) {
    ConfigEntries out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

ConfigEntries read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {"simulate", "dirac",  "predict",
                                                   "spectrum", "sweep-delay", "fig1",
                                                   "fig2",     "fig3",   "mechanism"};
    return kinds;
}

ExperimentConfig::ExperimentConfig(std::string kind, const ConfigEntries& file,
                                   const ConfigEntries& overrides)
    : kind_(std::move(kind)) {
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind_) == kinds.end())
        throw ConfigError("unknown experiment '" + kind_ + "'");
    entries_ = kind_defaults(kind_);
    for (const ConfigEntries* layer : {&file, &overrides})
        for (const auto& [key, value] : *layer) {
            if (!entries_.count(key)) throw ConfigError("unknown config key '" + key + "'");
            entries_[key] = value;
        }
    // Fail early on malformed numbers.
    for (const auto& [key, value] : entries_) {
        static const std::vector<std::string> textual = {
            "coupling", "coupling_csv", "pulse", "integrator", "history", "init", "rate_model"};
        if (std::find(textual.begin(), textual.end(), key) != textual.end()) continue;
        if (value.empty() || value == "auto") continue;
        if (key == "verify_halving") {
            flag(key);
            continue;
        }
        numbers(key);
    }
}

std::string ExperimentConfig::text(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

bool ExperimentConfig::is_auto(const std::string& key) const { return text(key) == "auto"; }

double ExperimentConfig::number(const std::string& key) const {
    const std::string v = text(key);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

long ExperimentConfig::integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
    return static_cast<long>(v);
}

bool ExperimentConfig::flag(const std::string& key) const {
    const std::string v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> ExperimentConfig::numbers(const std::string& key) const {
    std::vector<double> out;
    std::istringstream in(text(key));
    std::string cell;
    while (std::getline(in, cell, ',')) {
        cell = trim(cell);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw ConfigError(key + ": expected numbers, got '" + cell + "'");
        }
        if (used != cell.size()) throw ConfigError(key + ": expected numbers, got '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

void ExperimentConfig::resolve(const std::string& key, const std::string& value) {
    if (is_auto(key)) entries_[key] = value;
}

void ExperimentConfig::resolve(const std::string& key, double value) {
    resolve(key, format_double(value));
}

PulseFunction make_pulse(const ExperimentConfig& c) {
    const std::string kind = c.text("pulse");
    if (kind == "gaussian")
        return PulseFunction::gaussian_comb(
            {c.number("xi"), c.number("w"), static_cast<int>(c.integer("comb_range"))});
    if (kind == "constant") return PulseFunction::constant(c.number("pulse_level"), c.number("xi"));
    throw ConfigError("pulse: expected gaussian or constant, got '" + kind + "'");
}

CouplingMatrix make_coupling(const ExperimentConfig& c) {
    const std::string kind = c.text("coupling");
    const long n = c.integer("n");
    if (n < 2) throw ConfigError("n: need at least two oscillators");
    const double a = c.number("coupling_a");
    const NetworkTolerances tol = network_tolerances(c);
    if (kind == "all_to_all") return make_all_to_all(static_cast<std::size_t>(n), a);
    if (kind == "ring") return make_ring_laplacian(static_cast<std::size_t>(n), a);
    if (kind == "csv") {
        RealMatrix m = read_matrix_csv(c.text("coupling_csv"));
        if (static_cast<long>(m.rows()) != n)
            throw ConfigError("coupling_csv: matrix size does not match n");
        return CouplingMatrix(std::move(m), tol);
    }
    throw ConfigError("coupling: expected all_to_all, ring or csv, got '" + kind + "'");
}

SystemSpec make_system(const ExperimentConfig& c, double delta_t) {
    return SystemSpec(make_pulse(c), make_coupling(c), c.numbers("omega"), delta_t);
}

TheoryParams make_theory(const SystemSpec& spec, double mean_phase0, MeanRateModel model) {
    if (!spec.uniform_omega())
        throw InvalidArgument("linear predictions need one shared omega");
    TheoryParams p;
    p.pulse = spec.pulse;
    p.omega = spec.omega_of(0);
    p.jtilde = spec.coupling.row_sum();
    p.delta_t = spec.delta_t;
    p.mean_phase0 = mean_phase0;
    p.rate_model = model;
    return p;
}

double default_step(double psi, double delta_t) {
    const double h = psi / 200.0;
    return delta_t > 0.0 ? std::min(h, delta_t / 4.0) : h;
}

SystemSpec TwoOscillatorSetup::system() const {
    return SystemSpec(PulseFunction::gaussian_comb({xi, w, 20}), make_all_to_all(2, 1.0), omega,
                      delta_t);
}

TheoryParams TwoOscillatorSetup::theory() const {
    TheoryParams p = make_theory(system(), mean_phase0, MeanRateModel::first_order);
    p.rate_model = rate_model ? *rate_model : usable_rate_model(p);
    return p;
}

std::vector<double> TwoOscillatorSetup::initial_phases() const {
    return {mean_phase0 + phi0, mean_phase0 - phi0};
}

MeanRateModel usable_rate_model(TheoryParams params) {
    params.rate_model = MeanRateModel::first_order;
    try {
        LinearPredictor check(params);
        return MeanRateModel::first_order;
    } catch (const InvalidArgument&) {
        return MeanRateModel::leading_order;
    }
}

PhiComparison compare_phi(const TwoOscillatorSetup& setup, double t_end) {
    const TheoryParams theory = setup.theory();
    const LinearPredictor predictor(theory);
    const double h = setup.h_req > 0.0 ? setup.h_req
                                       : default_step(predictor.integrals().psi, setup.delta_t);
    Rk4Options opt;
    opt.policy = setup.policy;
    opt.verify_halving = setup.verify_halving;
    const std::vector<double> theta0 = setup.initial_phases();
    const Trajectory traj = integrate_rk4(setup.system(), theta0, t_end, h, opt);

    PhiComparison out;
    out.rate_model = theory.rate_model;
    for (std::size_t k = 0; k < traj.nodes(); ++k) {
        out.t.push_back(traj.time(k));
        out.phi_full.push_back(0.5 * (traj.phase(k, 0) - traj.phase(k, 1)));
    }
    out.phi_linear = predictor.phi_series(out.t, setup.phi0);
    return out;
}

WindowSeries windowed_linear_phi(const LinearPredictor& predictor, double phi0, double t_end,
                                 double h) {
    const auto nodes = static_cast<std::size_t>(std::ceil(t_end / h)) + 1;
    std::vector<double> times(nodes);
    for (std::size_t k = 0; k < nodes; ++k) times[k] = static_cast<double>(k) * h;
    SampledSeries mean, diff;
    mean.step = diff.step = h;
    for (const auto& s : predictor.march(times)) {
        mean.values.push_back(s.mean_phase);
        mean.rates.push_back(predictor.params().mean_rate(s.mean_phase));
        diff.values.push_back(2.0 * predictor.phi_at(s, phi0));
    }
    return window_average(mean, diff, predictor.params().pulse.period());
}

DelayPoint sync_time_point(const TwoOscillatorSetup& setup, double upper_frac,
                           double lower_frac) {
    const TheoryParams theory = setup.theory();
    const LinearPredictor predictor(theory);
    DelayPoint out;
    out.delta_t = setup.delta_t;
    out.rate_model = theory.rate_model;
    out.tau_formula = sync_time_two(theory);

    const double psi = predictor.integrals().psi;
    // Long enough to fall well below the lower edge of the fit band.
    const double t_end = std::max(6.0 * psi, out.tau_formula * std::log(1.0 / lower_frac) * 2.0 +
                                                 2.0 * psi);
    const double h = setup.h_req > 0.0 ? setup.h_req : default_step(psi, setup.delta_t);
    Rk4Options opt;
    opt.policy = setup.policy;
    opt.verify_halving = setup.verify_halving;
    const std::vector<double> theta0 = setup.initial_phases();
    const Trajectory traj = integrate_rk4(setup.system(), theta0, t_end, h, opt);
    try {
        out.tau_full = measure_sync_time(windowed_phase_diff(traj, 0, 1), upper_frac, lower_frac).tau;
    } catch (const NoDecay&) {
    }
    try {
        out.tau_linear = measure_sync_time(windowed_linear_phi(predictor, setup.phi0, t_end,
                                                               psi / 400.0),
                                           upper_frac, lower_frac)
                             .tau;
    } catch (const NoDecay&) {
    }
    return out;
}

namespace {

struct Context {
    ExperimentConfig& config;
    fs::path dir;
    std::vector<fs::path> written;

    std::ofstream create(const std::string& name) {
        written.push_back(dir / name);
        return open_output(dir / name);
    }
};

double mean_phase0(ExperimentConfig& c) {
    c.resolve("mean_phase0", 0.5 * c.number("xi"));
    return c.number("mean_phase0");
}

std::vector<double> initial_phases(ExperimentConfig& c, std::size_t n) {
    std::string init = c.text("init");
    if (init == "auto") {
        if (!c.text("theta0").empty()) init = "explicit";
        else init = n == 2 ? "pair" : "perturbed";
        c.resolve("init", init);
    }
    const double center = mean_phase0(c);
    std::vector<double> theta(n);
    if (init == "explicit") {
        theta = c.numbers("theta0");
        if (theta.size() != n) throw ConfigError("theta0: expected one phase per oscillator");
    } else if (init == "pair") {
        if (n != 2) throw ConfigError("init = pair needs n = 2");
        theta = {center + c.number("phi0"), center - c.number("phi0")};
    } else if (init == "random") {
        SplitMix64 rng(static_cast<std::uint64_t>(c.integer("seed")));
        for (double& th : theta) th = rng.uniform() * c.number("xi");
    } else if (init == "perturbed") {
        SplitMix64 rng(static_cast<std::uint64_t>(c.integer("seed")));
        const double spread = c.number("init_spread");
        for (double& th : theta) th = center + spread * (2.0 * rng.uniform() - 1.0);
    } else {
        throw ConfigError("init: expected auto, explicit, pair, random or perturbed");
    }
    return theta;
}

MeanRateModel rate_model(ExperimentConfig& c, TheoryParams params) {
    const MeanRateModel m = c.is_auto("rate_model") ? usable_rate_model(params)
                                                    : parse_rate_model(c.text("rate_model"));
    c.resolve("rate_model", rate_model_name(m));
    return m;
}

double nominal_psi(const SystemSpec& spec) {
    TheoryParams p;
    p.pulse = spec.pulse;
    p.omega = *std::max_element(spec.omega.begin(), spec.omega.end());
    p.jtilde = spec.coupling.row_sum();
    try {
        return period_integrals(p).psi;
    } catch (const InvalidArgument&) {
        return spec.pulse.period() / p.omega;
    }
}

// Longest finite predicted synchronization time over the non-Perron modes.
std::optional<double> slowest_mode_time(const SystemSpec& spec, double theta_bar0) {
    if (spec.delta_t <= 0.0 || !spec.uniform_omega()) return std::nullopt;
    try {
        const TheoryParams p = make_theory(spec, theta_bar0, MeanRateModel::leading_order);
        const SpectralDecomposition sd = spectral_decompose(spec.coupling);
        double worst = 0.0;
        for (const ModeStability& m : classify_stability(sd)) {
            if (m.verdict != ModeVerdict::synchronizing) return std::nullopt;
            worst = std::max(worst, mode_sync_time(m.lambda, p));
        }
        return worst > 0.0 ? std::optional<double>(worst) : std::nullopt;
    } catch (const Error&) {
        return std::nullopt;
    }
}

void write_manifest(Context& ctx) {
    std::ofstream out = open_output(ctx.dir / "manifest.txt");
    out << "experiment = " << ctx.config.kind() << '\n';
    for (const auto& [key, value] : ctx.config.entries()) out << key << " = " << value << '\n';
    out << "outputs = ";
    for (std::size_t k = 0; k < ctx.written.size(); ++k)
        out << (k ? "," : "") << ctx.written[k].filename().string();
    out << '\n';
    ctx.written.push_back(ctx.dir / "manifest.txt");
}

void run_simulate(Context& ctx) {
    ExperimentConfig& c = ctx.config;
    const SystemSpec spec = make_system(c, c.number("delta_t"));
    const std::vector<double> theta0 = initial_phases(c, spec.size());
    const double psi = nominal_psi(spec);
    c.resolve("h", default_step(psi, spec.delta_t));
    if (c.is_auto("t_end")) {
        const auto tau = slowest_mode_time(spec, c.number("mean_phase0"));
        c.resolve("t_end", tau ? 10.0 * *tau + 5.0 * psi : 50.0 * psi);
    }
    c.resolve("sync_tol", 1e-3 * spec.pulse.period());

    const std::string integrator = c.text("integrator");
    std::optional<Trajectory> traj;
    if (integrator == "rk4") {
        Rk4Options opt;
        opt.policy = parse_history(c.text("history"));
        opt.verify_halving = c.flag("verify_halving");
        opt.halving_rtol = c.number("halving_rtol");
        traj.emplace(integrate_rk4(spec, theta0, c.number("t_end"), c.number("h"), opt));
    } else if (integrator == "euler") {
        traj.emplace(integrate_euler_forward(spec, theta0, c.number("t_end"), c.number("h")));
    } else {
        throw ConfigError("integrator: expected rk4 or euler, got '" + integrator + "'");
    }
    const auto stride = static_cast<std::size_t>(std::max(1L, c.integer("csv_stride")));
    {
        auto out = ctx.create("trajectory.csv");
        write_trajectory_csv(out, *traj, stride);
    }
    {
        auto out = ctx.create("sync_report.txt");
        bool first = true;
        for (const SyncReport& r : strong_sync_check(*traj, c.number("sync_tol"))) {
            if (!first) out << '\n';
            first = false;
            write_sync_report(out, r);
        }
    }
    auto out = ctx.create("window_1_2.csv");
    write_window_csv(out, windowed_phase_diff(*traj, 0, 1, stride));
}

void run_dirac(Context& ctx, const std::string& prefix, double delta_t) {
    ExperimentConfig& c = ctx.config;
    DiracParams p;
    p.omega = c.number("dirac_omega");
    p.jump = c.number("dirac_jump");
    p.delta_t = delta_t;
    p.max_events_per_time = static_cast<std::size_t>(c.integer("dirac_max_events"));
    const EventTrajectory traj = simulate_dirac(p, c.numbers("dirac_theta0"), c.number("dirac_t_end"));
    {
        auto out = ctx.create(prefix + "events.csv");
        write_events_csv(out, traj);
    }
    auto out = ctx.create(prefix + "samples.csv");
    write_dirac_samples_csv(out, traj, c.number("dirac_sample_dt"));
}

void run_spectrum(Context& ctx) {
    ExperimentConfig& c = ctx.config;
    const SystemSpec spec = make_system(c, c.number("delta_t"));
    const NetworkTolerances tol = network_tolerances(c);
    const SpectralDecomposition sd = spectral_decompose(spec.coupling, tol);
    std::optional<TheoryParams> theory;
    if (spec.uniform_omega() && spec.delta_t > 0.0)
        theory = make_theory(spec, mean_phase0(c), MeanRateModel::leading_order);

    auto csv = ctx.create("spectrum.csv");
    auto txt = ctx.create("spectrum.txt");
    csv << "index,lambda_re,lambda_im,growth,verdict,tau\n";
    txt << "row_sum=" << format_double(sd.row_sum) << '\n';
    txt << "condition=" << format_double(sd.condition) << '\n';
    txt << "perron_index=" << sd.perron_index + 1 << '\n';
    for (std::size_t i = 0; i < sd.size(); ++i) {
        const cplx lambda = sd.eigenvalues[i];
        const double growth = (lambda * (sd.row_sum - lambda)).real();
        std::string verdict = "perron";
        double tau = std::numeric_limits<double>::infinity();
        if (i != sd.perron_index) {
            for (const ModeStability& m : classify_stability(sd, tol))
                if (m.index == i) verdict = to_string(m.verdict);
            if (theory && growth < 0.0) tau = mode_sync_time(lambda, *theory);
        }
        csv << i + 1 << ',' << format_double(lambda.real()) << ',' << format_double(lambda.imag())
            << ',' << format_double(growth) << ',' << verdict << ',' << format_double(tau) << '\n';
        txt << "mode=" << i + 1 << " lambda=" << format_double(lambda.real()) << ','
            << format_double(lambda.imag()) << " growth=" << format_double(growth)
            << " verdict=" << verdict << " tau=" << format_double(tau) << '\n';
    }
}

void run_predict(Context& ctx) {
    ExperimentConfig& c = ctx.config;
    const SystemSpec spec = make_system(c, c.number("delta_t"));
    const std::vector<double> theta0 = initial_phases(c, spec.size());
    TheoryParams params = make_theory(spec, 0.0, MeanRateModel::first_order);
    const SpectralDecomposition sd = spectral_decompose(spec.coupling, network_tolerances(c));
    // Initial mean phase <1|theta(0)> and deviations.
    double theta_bar0 = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i)
        theta_bar0 += sd.left(sd.perron_index, i).real() * theta0[i];
    params.mean_phase0 = theta_bar0;
    params.rate_model = rate_model(c, params);
    const LinearPredictor predictor(params);
    const PeriodIntegrals& pi = predictor.integrals();

    std::vector<double> phi0(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) phi0[i] = theta0[i] - theta_bar0;
    std::vector<ModePrediction> modes;
    std::vector<std::size_t> mode_index;
    for (std::size_t i = 0; i < sd.size(); ++i) {
        if (i == sd.perron_index) continue;
        modes.push_back(make_mode_prediction(sd.eigenvalues[i], sd.project(i, phi0), params));
        mode_index.push_back(i);
    }
    if (c.is_auto("t_end")) {
        double tau = 0.0;
        for (const auto& m : modes)
            if (std::isfinite(m.tau)) tau = std::max(tau, m.tau);
        c.resolve("t_end", tau > 0.0 ? 5.0 * tau + 2.0 * pi.psi : 20.0 * pi.psi);
    }
    const double t_end = c.number("t_end");
    const auto samples = static_cast<std::size_t>(std::max(2L, c.integer("samples")));
    std::vector<double> times(samples + 1);
    for (std::size_t k = 0; k <= samples; ++k)
        times[k] = t_end * static_cast<double>(k) / static_cast<double>(samples);

    {
        auto txt = ctx.create("theory.txt");
        txt << "psi=" << format_double(pi.psi) << '\n';
        txt << "S=" << format_double(pi.S) << '\n';
        txt << "S_linear=" << format_double(predictor.linear_decay_integral()) << '\n';
        txt << "rate_model=" << rate_model_name(params.rate_model) << '\n';
        if (spec.size() == 2) {
            try {
                txt << "tau_two=" << format_double(sync_time_two(params)) << '\n';
            } catch (const InfiniteSyncTime&) {
                txt << "tau_two=inf\n";
            }
        }
        for (std::size_t k = 0; k < modes.size(); ++k)
            txt << "mode=" << mode_index[k] + 1 << " lambda=" << format_double(modes[k].lambda.real())
                << ',' << format_double(modes[k].lambda.imag())
                << " amplitude=" << format_double(std::abs(modes[k].amplitude))
                << " growth=" << format_double(modes[k].decay_rate_sign)
                << " tau=" << format_double(modes[k].tau) << '\n';
    }
    auto csv = ctx.create("prediction.csv");
    if (spec.size() == 2) {
        const double phi_start = 0.5 * (theta0[0] - theta0[1]);
        csv << "t,phi_linear\n";
        const auto phi = predictor.phi_series(times, phi_start);
        for (std::size_t k = 0; k < times.size(); ++k)
            csv << format_double(times[k]) << ',' << format_double(phi[k]) << '\n';
        return;
    }
    csv << "t";
    for (std::size_t idx : mode_index) csv << ",mode_" << idx + 1 << "_abs";
    csv << '\n';
    std::vector<std::vector<cplx>> series;
    for (const auto& m : modes) series.push_back(predictor.mode_series(times, m));
    for (std::size_t k = 0; k < times.size(); ++k) {
        csv << format_double(times[k]);
        for (const auto& s : series) csv << ',' << format_double(std::abs(s[k]));
        csv << '\n';
    }
}

TwoOscillatorSetup two_oscillator_setup(ExperimentConfig& c, double delta_t) {
    if (c.integer("n") != 2 || c.text("coupling") != "all_to_all" || c.number("coupling_a") != 1.0)
        throw ConfigError(c.kind() + " uses two oscillators with J_ij = 1 - delta_ij");
    if (c.text("pulse") != "gaussian" || c.numbers("omega").size() != 1)
        throw ConfigError(c.kind() + " needs a Gaussian pulse and one omega");
    TwoOscillatorSetup s;
    s.omega = c.number("omega");
    s.xi = c.number("xi");
    s.w = c.number("w");
    s.delta_t = delta_t;
    s.phi0 = c.number("phi0");
    s.mean_phase0 = mean_phase0(c);
    s.policy = parse_history(c.text("history"));
    s.verify_halving = c.flag("verify_halving");
    if (!c.is_auto("h")) s.h_req = c.number("h");
    if (!c.is_auto("rate_model")) s.rate_model = parse_rate_model(c.text("rate_model"));
    return s;
}

void run_fig2(Context& ctx) {
    ExperimentConfig& c = ctx.config;
    const auto stride = static_cast<std::size_t>(std::max(1L, c.integer("csv_stride")));
    const bool auto_end = c.is_auto("t_end");
    std::ostringstream models;
    for (const auto& [name, dt] : {std::pair<std::string, double>{"fig2.csv", c.number("delta_t")},
                                   {"fig2_inset.csv", c.number("inset_delta_t")}}) {
        const TwoOscillatorSetup s = two_oscillator_setup(c, dt);
        const TheoryParams theory = s.theory();
        const double psi = period_integrals(theory).psi;
        const double t_end =
            auto_end ? std::max(4.0 * psi, sync_time_two(theory) * std::log(1000.0) + 2.0 * psi)
                     : c.number("t_end");
        const PhiComparison cmp = compare_phi(s, t_end);
        models << (models.tellp() > 0 ? "," : "") << rate_model_name(cmp.rate_model);
        auto out = ctx.create(name);
        out << "t,phi_full,phi_linear\n";
        for (std::size_t k = 0; k < cmp.t.size(); k += stride)
            out << format_double(cmp.t[k]) << ',' << format_double(cmp.phi_full[k]) << ','
                << format_double(cmp.phi_linear[k]) << '\n';
    }
    c.resolve("rate_model", models.str());
}

void run_delay_sweep(Context& ctx, const std::string& name) {
    ExperimentConfig& c = ctx.config;
    std::vector<double> delays = c.numbers("delays");
    std::sort(delays.begin(), delays.end());
    std::vector<DelayPoint> points;
    for (double dt : delays) {
        if (!(dt > 0.0)) throw ConfigError("delays must be > 0");
        points.push_back(sync_time_point(two_oscillator_setup(c, dt), c.number("fit_upper"),
                                         c.number("fit_lower")));
    }
    auto out = ctx.create(name);
    out << "delta_t,tau_measured_full,tau_linear,tau_formula\n";
    std::ostringstream models;
    for (const DelayPoint& p : points) {
        out << format_double(p.delta_t) << ','
            << (p.tau_full ? format_double(*p.tau_full) : "nan") << ','
            << (p.tau_linear ? format_double(*p.tau_linear) : "nan") << ','
            << format_double(p.tau_formula) << '\n';
        models << (models.tellp() > 0 ? "," : "") << rate_model_name(p.rate_model);
    }
    c.resolve("rate_model", models.str());
}

void run_mechanism(Context& ctx) {
    ExperimentConfig& c = ctx.config;
    const TwoOscillatorSetup s = two_oscillator_setup(c, c.number("delta_t"));
    const double psi = period_integrals(s.theory()).psi;
    c.resolve("t_end", 4.0 * psi);
    const double h = c.is_auto("h") ? default_step(psi, s.delta_t) : c.number("h");
    c.resolve("h", h);
    Rk4Options opt;
    opt.policy = s.policy;
    opt.verify_halving = s.verify_halving;
    const Trajectory traj = integrate_rk4(s.system(), s.initial_phases(), c.number("t_end"), h, opt);
    const MechanismSeries ms = mechanism_series(traj);
    {
        auto out = ctx.create("mechanism.csv");
        write_mechanism_csv(out, ms, static_cast<std::size_t>(std::max(1L, c.integer("csv_stride"))));
    }
    auto out = ctx.create("mechanism_peaks.csv");
    out << "oscillator,sigma_peak,rate_offset,fwhm\n";
    for (std::size_t i = 0; i < ms.peaks.size(); ++i)
        for (const PeakPair& p : ms.peaks[i])
            out << i + 1 << ',' << format_double(p.sigma_peak) << ','
                << (p.offset ? format_double(*p.offset) : "nan") << ','
                << (p.fwhm ? format_double(*p.fwhm) : "nan") << '\n';
}

}  // namespace

std::vector<fs::path> run_experiment(ExperimentConfig config, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());
    Context ctx{config, out_dir, {}};
    const std::string& kind = config.kind();
    try {
        if (kind == "simulate") run_simulate(ctx);
        else if (kind == "dirac") run_dirac(ctx, "", config.number("dirac_delta_t"));
        else if (kind == "fig1") {
            run_dirac(ctx, "fig1_no_delay_", 0.0);
            run_dirac(ctx, "fig1_delay_", config.number("dirac_delta_t"));
        } else if (kind == "spectrum") run_spectrum(ctx);
        else if (kind == "predict") run_predict(ctx);
        else if (kind == "fig2") run_fig2(ctx);
        else if (kind == "fig3") run_delay_sweep(ctx, "fig3.csv");
        else if (kind == "sweep-delay") run_delay_sweep(ctx, "sweep.csv");
        else if (kind == "mechanism") run_mechanism(ctx);
    } catch (const NumericalError& e) {
        throw NumericalError(kind + ": " + e.what());
    }
    write_manifest(ctx);
    return ctx.written;
}

}  // namespace pulsesync
