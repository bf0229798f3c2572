#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pulsesync/errors.hpp"
#include "pulsesync/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string kinds_list() {
    std::string out;
    for (const auto& k : pulsesync::experiment_kinds()) out += (out.empty() ? "" : ", ") + k;
    return out;
}

// Remaining "--key value" or "--key=value" tokens become config overrides.
pulsesync::ConfigEntries parse_overrides(const std::vector<std::string>& args) {
    pulsesync::ConfigEntries out;
    for (std::size_t k = 0; k < args.size(); ++k) {
        const std::string& tok = args[k];
        if (tok.rfind("--", 0) != 0 || tok.size() <= 2)
            throw pulsesync::ConfigError("unexpected argument '" + tok + "'");
        std::string key = tok.substr(2);
        std::string value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key.erase(eq);
        } else {
            if (k + 1 >= args.size()) throw pulsesync::ConfigError("missing value for --" + key);
            value = args[++k];
        }
        for (char& ch : key)
            if (ch == '-') ch = '_';
        out[key] = value;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delayed pulse-coupled oscillator experiments"};
    app.allow_extras();
    std::string kind;
    std::string config_path;
    std::string out_dir;
    app.add_option("experiment", kind, "One of: " + kinds_list())->required();
    app.add_option("--config", config_path, "key = value configuration file")->required();
    app.add_option("--out", out_dir, "Output directory")->required();
    app.footer("Any other --key value pair overrides the matching config entry.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const pulsesync::ConfigEntries overrides = parse_overrides(app.remaining());
        pulsesync::ExperimentConfig config(kind, pulsesync::read_config_file(config_path), overrides);
        for (const auto& path : pulsesync::run_experiment(std::move(config), out_dir))
            std::cout << path.string() << '\n';
    } catch (const pulsesync::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const pulsesync::InvalidArgument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const pulsesync::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
