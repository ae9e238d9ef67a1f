#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stoq/adiabatic.hpp"
#include "stoq/sme.hpp"

namespace stoq::harness {

// Raised for anything wrong with the configuration itself (exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Model { FullSme, Bloch, Polar, Telegraph };
std::string to_string(Model m);

enum class RateSource {
    Dispersive,    // pointer-state rates from params
    Literal,       // alpha0 = -2iE/kappa rates from params
    PhotonNumber,  // adiabatic.n0 with params chi, kappa
    Explicit,      // adiabatic.delta / gamma_m given directly
};
std::string to_string(RateSource s);

struct AdiabaticSection {
    RateSource rates = RateSource::Dispersive;
    double n0 = 0.0;
    double delta = 0.0;
    double gamma_m = 0.0;
    adiabatic::NoiseMode noise = adiabatic::NoiseMode::Full;
    bool milstein = true;
    bool efficiency_scaled_noise = false;
    double dt = 1e-3;
    double duration = 1000.0;
    int record_every = 10;
};

struct TelegraphSection {
    // taken from jump_rates of the adiabatic rates when absent
    std::optional<double> mu;
    std::optional<double> nu;
    double duration = 1e4;
    double sample_dt = 0.01;
};

enum class RegimeHint { Auto, Rabi, Jump };

struct PipelineOptions {
    std::optional<double> cutoff_multiplier;  // 1.0 Rabi, 2.5 jump
    std::optional<double> threshold;          // Otsu when absent
    std::size_t segment_length = 16384;
    double overlap = 0.5;
    std::string signal = "auto";  // z, x, current, state; auto picks per model
    int poly_degree = 2;
    RegimeHint regime = RegimeHint::Auto;
};

struct RunConfig {
    Model model = Model::FullSme;
    sme::FullSystemParams params;
    AdiabaticSection adiabatic;
    TelegraphSection telegraph;
    PipelineOptions pipeline;
    std::uint64_t seed = 0;
    int n_trajectories = 1;
    int threads = 1;
    std::string output;

    adiabatic::AdiabaticParams rates() const;
    adiabatic::JumpRates telegraph_rates() const;
    bool jump_regime() const;
    double cutoff_multiplier() const;
    // Low-pass cutoff in cycles/us: multiplier * Omega / pi.
    double cutoff() const;
    std::string signal_column() const;
    void validate() const;
};

RunConfig config_parse(const std::string& text);
RunConfig config_load(const std::filesystem::path& path);
// Fully resolved configuration; config_parse(dump) reproduces the config.
nlohmann::json config_to_json(const RunConfig& cfg);

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::string version;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> outputs;
    double wall_clock_s = 0.0;
    std::vector<std::string> warnings;
    nlohmann::json summary = nlohmann::json::object();

    nlohmann::json to_json() const;
};

std::string version();

// Writes one CSV per trajectory plus manifest.json into out_dir.
RunManifest run_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Pools every trajectory CSV in in_dir through the clock-signal pipeline and
// writes periods.csv, psd.csv, lorentz.json, wald.json or jump.json, and
// telegraph.json in the jump regime.
RunManifest run_analyze(const RunConfig& cfg, const std::filesystem::path& in_dir,
                        const std::filesystem::path& out_dir);

struct SweepSpec {
    std::string variable;  // Omega, E or n0
    std::vector<double> values;
};

struct SweepRow {
    double value = 0.0;
    double f0 = 0.0;
    double wald_m = 0.0;
    double wald_lambda = 0.0;
    double snr = 0.0;
    double lambda_closed = 0.0;  // pi / Gamma
    double kappa_n0 = 0.0;
    double dissipation = 0.0;
    double ground_fraction = 0.0;
    double up_rate = 0.0;
    std::string status = "ok";
};

struct SweepResult {
    RunManifest manifest;
    std::vector<SweepRow> rows;
};

// Runs simulate + analyze per point into out_dir/point_NN and writes summary.csv.
SweepResult run_sweep(const RunConfig& cfg, const SweepSpec& spec, const std::filesystem::path& out_dir);

// Applies a sweep value to a copy of cfg.
RunConfig with_sweep_value(const RunConfig& cfg, const std::string& variable, double value);

}  // namespace stoq::harness
