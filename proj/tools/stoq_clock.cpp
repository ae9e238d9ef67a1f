#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stoq/harness.hpp"

namespace fs = std::filesystem;
using namespace stoq;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> n_trajectories;
    std::string out;
};

harness::RunConfig load(const std::string& path, const Overrides& ov) {
    auto cfg = harness::config_load(path);
    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.params.seed = *ov.seed;
    }
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.n_trajectories) cfg.n_trajectories = *ov.n_trajectories;
    cfg.validate();
    return cfg;
}

// --out, then the config's output key, then $STOQ_CLOCK_OUT/<command>
fs::path output_dir(const Overrides& ov, const harness::RunConfig& cfg, const std::string& command) {
    if (!ov.out.empty()) return ov.out;
    if (!cfg.output.empty()) return cfg.output;
    const char* root = std::getenv("STOQ_CLOCK_OUT");
    return fs::path(root && *root ? root : "stoq-out") / command;
}

void report(const harness::RunManifest& man, const fs::path& dir) {
    for (const auto& w : man.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << man.command << ": wrote " << man.outputs.size() << " files to " << dir.string() << " in "
              << man.wall_clock_s << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and statistics toolkit for a measurement-driven qubit clock", "stoq-clock"};
    app.set_version_flag("--version", harness::version());
    app.require_subcommand(1);

    Overrides ov;
    std::string config_path;
    std::string input_dir;
    std::string variable;
    std::vector<double> values;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "YAML run configuration (or a manifest.json)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", ov.seed, "Override the base seed");
        sub->add_option("--out", ov.out, "Output directory");
        sub->add_option("--threads", ov.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("-n,--trajectories", ov.n_trajectories, "Override n_trajectories")
            ->check(CLI::PositiveNumber);
    };

    auto* simulate = app.add_subcommand("simulate", "Run the configured model and write trajectory CSVs");
    add_common(simulate);
    auto* analyze = app.add_subcommand("analyze", "Run the clock-signal pipeline over trajectory CSVs");
    add_common(analyze);
    analyze->add_option("-i,--input", input_dir, "Directory of trajectory CSVs")->required()->check(CLI::ExistingDirectory);
    auto* sweep = app.add_subcommand("sweep", "Simulate and analyze over a parameter grid");
    add_common(sweep);
    sweep->add_option("--var", variable, "Sweep variable")->required()->check(CLI::IsMember({"Omega", "E", "n0"}));
    sweep->add_option("--values", values, "Sweep values (comma or space separated)")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        const auto cfg = load(config_path, ov);
        if (simulate->parsed()) {
            const auto dir = output_dir(ov, cfg, "simulate");
            report(harness::run_simulate(cfg, dir), dir);
        } else if (analyze->parsed()) {
            const auto dir = output_dir(ov, cfg, "analyze");
            report(harness::run_analyze(cfg, input_dir, dir), dir);
        } else {
            const auto dir = output_dir(ov, cfg, "sweep");
            const auto res = harness::run_sweep(cfg, {variable, values}, dir);
            report(res.manifest, dir);
            for (const auto& row : res.rows) {
                if (row.status != "ok") std::cerr << "point " << row.value << ": " << row.status << '\n';
            }
        }
    } catch (const harness::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
