#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pulsesync/analysis.hpp"
#include "pulsesync/dde.hpp"
#include "pulsesync/lintheory.hpp"

namespace pulsesync {

using ConfigEntries = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError.
ConfigEntries parse_config_text(const std::string& text);
ConfigEntries read_config_file(const std::filesystem::path& path);

const std::vector<std::string>& experiment_kinds();

/// Fully resolved experiment settings: defaults for the kind, then the file,
/// then command-line overrides. Unknown keys are rejected.
class ExperimentConfig {
public:
    ExperimentConfig(std::string kind, const ConfigEntries& file, const ConfigEntries& overrides);

    const std::string& kind() const noexcept { return kind_; }
    const ConfigEntries& entries() const noexcept { return entries_; }

    std::string text(const std::string& key) const;
    double number(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;
    bool is_auto(const std::string& key) const;
    /// Replaces an `auto` entry with the value actually used.
    void resolve(const std::string& key, const std::string& value);
    void resolve(const std::string& key, double value);

private:
    std::string kind_;
    ConfigEntries entries_;
};

/// Runs the experiment, writes its CSVs and manifest.txt into `out_dir` and
/// returns the written paths (manifest last).
std::vector<std::filesystem::path> run_experiment(ExperimentConfig config,
                                                  const std::filesystem::path& out_dir);

// Building blocks shared by the experiments.

PulseFunction make_pulse(const ExperimentConfig& config);
CouplingMatrix make_coupling(const ExperimentConfig& config);
SystemSpec make_system(const ExperimentConfig& config, double delta_t);
TheoryParams make_theory(const SystemSpec& spec, double mean_phase0, MeanRateModel model);

/// h_req = min(psi/200, delta_t/4), or psi/200 without delay.
double default_step(double psi, double delta_t);

/// Two identical oscillators with J_ij = 1 - delta_ij.
struct TwoOscillatorSetup {
    double omega = 2.0;
    double xi = 1.01;
    double w = 0.1;
    double delta_t = 0.01;
    double phi0 = 0.05;
    double mean_phase0 = 0.505;
    HistoryPolicy policy = HistoryPolicy::constant_rate;
    /// 0 selects default_step.
    double h_req = 0.0;
    bool verify_halving = false;
    /// Empty: first order when T stays positive, leading order otherwise.
    std::optional<MeanRateModel> rate_model;

    SystemSpec system() const;
    TheoryParams theory() const;
    std::vector<double> initial_phases() const;
};

/// Picks first order when T stays positive over a period.
MeanRateModel usable_rate_model(TheoryParams params);

struct PhiComparison {
    std::vector<double> t;
    std::vector<double> phi_full;
    std::vector<double> phi_linear;
    MeanRateModel rate_model = MeanRateModel::first_order;
};

/// Full integration and linear prediction of phi(t) on the same grid.
PhiComparison compare_phi(const TwoOscillatorSetup& setup, double t_end);

struct DelayPoint {
    double delta_t = 0.0;
    std::optional<double> tau_full;
    std::optional<double> tau_linear;
    double tau_formula = 0.0;
    MeanRateModel rate_model = MeanRateModel::first_order;
};

/// Synchronization time three ways: fitted from the full integration,
/// fitted from the linear prediction, and the closed-form estimate.
DelayPoint sync_time_point(const TwoOscillatorSetup& setup, double upper_frac = 0.9,
                           double lower_frac = 0.01);

/// Window-averaged linear prediction of theta_1 - theta_2 = 2 phi.
WindowSeries windowed_linear_phi(const LinearPredictor& predictor, double phi0, double t_end,
                                 double h);

}  // namespace pulsesync
