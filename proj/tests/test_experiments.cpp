#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pulsesync/errors.hpp"
#include "pulsesync/experiments.hpp"

using namespace pulsesync;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("pulsesync_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config text parsing") {
    const ConfigEntries c = parse_config_text("# comment\n omega = 3 # trailing\n\nxi=2\r\n");
    CHECK(c.at("omega") == "3");
    CHECK(c.at("xi") == "2");
    CHECK_THROWS_AS(parse_config_text("omega 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(" = 3\n"), ConfigError);
    CHECK_THROWS_AS(read_config_file("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("layering: defaults, file, overrides") {
    ExperimentConfig c("simulate", {{"omega", "3"}, {"n", "4"}}, {{"omega", "5"}});
    CHECK(c.number("omega") == 5.0);
    CHECK(c.integer("n") == 4);
    CHECK(c.number("xi") == 1.01);
    CHECK(c.is_auto("t_end"));
    c.resolve("t_end", 2.5);
    CHECK(c.number("t_end") == 2.5);
    c.resolve("t_end", 9.0);
    CHECK(c.number("t_end") == 2.5);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(ExperimentConfig("nope", {}, {}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig("simulate", {{"omgea", "1"}}, {}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig("simulate", {{"omega", "fast"}}, {}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig("simulate", {{"verify_halving", "maybe"}}, {}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig("simulate", {{"delays", "0.1,x"}}, {}), ConfigError);
    const ExperimentConfig c("simulate", {{"n", "2.5"}}, {});
    CHECK_THROWS_AS(c.integer("n"), ConfigError);
}

TEST_CASE("fig3 defaults to a logarithmic delay grid") {
    const ExperimentConfig c("fig3", {}, {});
    const auto d = c.numbers("delays");
    REQUIRE(d.size() == 8);
    CHECK(d.front() == doctest::Approx(0.002));
    CHECK(d.back() == doctest::Approx(0.1));
}

TEST_CASE("builders") {
    const ExperimentConfig c("simulate", {{"n", "5"}, {"coupling", "ring"}, {"coupling_a", "2"}}, {});
    const SystemSpec spec = make_system(c, 0.02);
    CHECK(spec.size() == 5);
    CHECK(spec.coupling(0, 0) == -4.0);
    CHECK(spec.delta_t == 0.02);
    const ExperimentConfig bad("simulate", {{"coupling", "star"}}, {});
    CHECK_THROWS_AS(make_coupling(bad), ConfigError);
    CHECK(default_step(0.4, 0.01) == doctest::Approx(0.002));
    CHECK(default_step(0.4, 0.004) == doctest::Approx(0.001));
    CHECK(default_step(0.4, 0.0) == doctest::Approx(0.002));
}

TEST_CASE("rate model fallback") {
    TwoOscillatorSetup s;
    CHECK(s.theory().rate_model == MeanRateModel::first_order);
    s.delta_t = 0.1;
    CHECK(s.theory().rate_model == MeanRateModel::leading_order);
}

TEST_CASE("simulate writes deterministic outputs and a manifest") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    const ConfigEntries file{{"t_end", "3"}};
    const auto written = run_experiment(ExperimentConfig("simulate", file, {}), a);
    run_experiment(ExperimentConfig("simulate", file, {}), b);
    REQUIRE(written.size() == 4);
    CHECK(written.back().filename() == "manifest.txt");
    for (const auto& p : written) {
        CHECK(fs::exists(p));
        CHECK(slurp(p) == slurp(b / p.filename()));
    }
    const std::string manifest = slurp(a / "manifest.txt");
    CHECK(manifest.find("h = 0.0019") != std::string::npos);
    CHECK(manifest.find("init = pair") != std::string::npos);
    CHECK(slurp(a / "sync_report.txt").find("synced=true") != std::string::npos);
}

TEST_CASE("every experiment kind runs on small inputs") {
    const ConfigEntries small{{"t_end", "2"}, {"delays", "0.01,0.02"}, {"dirac_t_end", "3"}};
    for (const std::string& kind : experiment_kinds()) {
        CAPTURE(kind);
        ConfigEntries file = small;
        if (kind == "spectrum" || kind == "predict") file["n"] = "4";
        if (kind == "fig2" || kind == "mechanism") file.erase("t_end");
        const auto written = run_experiment(ExperimentConfig(kind, file, {}), scratch(kind));
        CHECK(written.size() >= 2);
    }
}

TEST_CASE("numerical failures propagate as NumericalError") {
    const ConfigEntries file{{"omega", "0.5"}, {"coupling_a", "-1"}, {"t_end", "2"}, {"h", "0.002"}};
    CHECK_THROWS_AS(run_experiment(ExperimentConfig("simulate", file, {}), scratch("fail")),
                    NumericalError);
}
