#include "stoq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "stoq/io.hpp"
#include "stoq/signal.hpp"
#include "stoq/stats.hpp"

#ifndef STOQ_VERSION
#define STOQ_VERSION "0.0.0"
#endif

namespace stoq::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return STOQ_VERSION; }

std::string to_string(Model m) {
    switch (m) {
        case Model::FullSme: return "full_sme";
        case Model::Bloch: return "bloch";
        case Model::Polar: return "polar";
        case Model::Telegraph: return "telegraph";
    }
    return "full_sme";
}

std::string to_string(RateSource s) {
    switch (s) {
        case RateSource::Dispersive: return "dispersive";
        case RateSource::Literal: return "literal";
        case RateSource::PhotonNumber: return "photon_number";
        case RateSource::Explicit: return "explicit";
    }
    return "dispersive";
}

namespace {

std::string to_string(RegimeHint r) {
    return r == RegimeHint::Rabi ? "rabi" : r == RegimeHint::Jump ? "jump" : "auto";
}

// Reads keys from one mapping and rejects any key that was never asked for.
class Section {
public:
    Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(where() + "must be a mapping");
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull(); }

    template <typename T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!has(key)) return;
        out = convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) throw ConfigError(path_.empty() ? key + " required" : path_ + "." + key + " required");
        return convert<T>(key);
    }

    // "auto" or null leaves the optional empty
    void read_auto(const std::string& key, std::optional<double>& out) {
        seen_.insert(key);
        if (!has(key)) return;
        const YAML::Node v = node_[key];
        if (v.IsScalar() && v.Scalar() == "auto") {
            out.reset();
            return;
        }
        out = convert<double>(key);
    }

    Section child(const std::string& key) {
        seen_.insert(key);
        return Section(node_ && node_.IsMap() ? node_[key] : YAML::Node(), path_.empty() ? key : path_ + "." + key);
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError("unknown key '" + (path_.empty() ? key : path_ + "." + key) + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? "config " : "'" + path_ + "' "; }

    template <typename T>
    T convert(const std::string& key) const {
        const std::string full = path_.empty() ? key : path_ + "." + key;
        const YAML::Node v = node_[key];
        if (!v.IsScalar()) throw ConfigError("key '" + full + "': expected a scalar");
        try {
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                if (!v.Scalar().empty() && v.Scalar()[0] == '-') throw YAML::BadConversion(v.Mark());
            }
            return v.as<T>();
        } catch (const YAML::BadConversion&) {
            const char* kind = std::is_same_v<T, bool>          ? "a boolean"
                               : std::is_same_v<T, std::string> ? "a string"
                               : std::is_floating_point_v<T>    ? "a number"
                                                                : "a non-negative integer";
            throw ConfigError("key '" + full + "': expected " + kind + ", got '" + v.Scalar() + "'");
        }
    }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

Model model_from_string(const std::string& s) {
    if (s == "full_sme") return Model::FullSme;
    if (s == "bloch") return Model::Bloch;
    if (s == "polar") return Model::Polar;
    if (s == "telegraph") return Model::Telegraph;
    throw ConfigError("unknown model '" + s + "' (expected full_sme, bloch, polar or telegraph)");
}

RateSource rate_source_from_string(const std::string& s) {
    if (s == "dispersive") return RateSource::Dispersive;
    if (s == "literal") return RateSource::Literal;
    if (s == "photon_number") return RateSource::PhotonNumber;
    if (s == "explicit") return RateSource::Explicit;
    throw ConfigError("unknown adiabatic.rates '" + s + "' (expected dispersive, literal, photon_number or explicit)");
}

RegimeHint regime_from_string(const std::string& s) {
    if (s == "auto") return RegimeHint::Auto;
    if (s == "rabi") return RegimeHint::Rabi;
    if (s == "jump") return RegimeHint::Jump;
    throw ConfigError("unknown pipeline.regime '" + s + "' (expected auto, rabi or jump)");
}

template <typename F>
auto as_config_error(F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

RunConfig parse_node(const YAML::Node& root_in) {
    YAML::Node root = root_in;
    if (root && root.IsMap() && root["stoq_manifest"]) {
        if (!root["config"]) throw ConfigError("manifest has no config section");
        root = root["config"];
    }
    if (!root || !root.IsMap()) throw ConfigError("config must be a mapping");

    RunConfig cfg;
    Section top(root, "");
    std::string model = "full_sme";
    top.read("model", model);
    cfg.model = model_from_string(model);
    cfg.seed = top.require<std::uint64_t>("seed");
    top.read("n_trajectories", cfg.n_trajectories);
    top.read("threads", cfg.threads);
    top.read("output", cfg.output);

    auto& p = cfg.params;
    Section ps = top.child("params");
    ps.read("E", p.E);
    if (ps.has("E_over_2pi")) {
        if (ps.has("E")) throw ConfigError("params.E and params.E_over_2pi are mutually exclusive");
        double e = 0.0;
        ps.read("E_over_2pi", e);
        p.E = 2.0 * std::numbers::pi * e;
    } else {
        double unused = 0.0;
        ps.read("E_over_2pi", unused);
    }
    ps.read("omega", p.omega);
    ps.read("chi", p.chi);
    ps.read("gamma", p.gamma);
    ps.read("kappa", p.kappa);
    ps.read("eta", p.eta);
    ps.read("n_max", p.n_max);
    ps.read("dt", p.dt);
    ps.read("duration", p.duration);
    std::string current = sme::to_string(p.current);
    ps.read("current_convention", current);
    p.current = as_config_error([&] { return sme::current_convention_from_string(current); });
    std::string integrator = sme::to_string(p.integrator);
    ps.read("integrator", integrator);
    p.integrator = as_config_error([&] { return sme::integrator_from_string(integrator); });
    ps.read("record_every", p.record_every);
    ps.read("positivity_check_every", p.positivity_check_every);
    ps.finish();
    p.seed = cfg.seed;

    auto& a = cfg.adiabatic;
    Section as = top.child("adiabatic");
    std::string rates = to_string(a.rates);
    as.read("rates", rates);
    a.rates = rate_source_from_string(rates);
    as.read("n0", a.n0);
    as.read("delta", a.delta);
    as.read("gamma_m", a.gamma_m);
    std::string noise = adiabatic::to_string(a.noise);
    as.read("noise", noise);
    a.noise = as_config_error([&] { return adiabatic::noise_mode_from_string(noise); });
    as.read("milstein", a.milstein);
    as.read("efficiency_scaled_noise", a.efficiency_scaled_noise);
    as.read("dt", a.dt);
    as.read("duration", a.duration);
    as.read("record_every", a.record_every);
    as.finish();

    auto& t = cfg.telegraph;
    Section ts = top.child("telegraph");
    ts.read_auto("mu", t.mu);
    ts.read_auto("nu", t.nu);
    ts.read("duration", t.duration);
    ts.read("sample_dt", t.sample_dt);
    ts.finish();

    auto& pl = cfg.pipeline;
    Section pls = top.child("pipeline");
    pls.read_auto("cutoff_multiplier", pl.cutoff_multiplier);
    pls.read_auto("threshold", pl.threshold);
    pls.read("segment_length", pl.segment_length);
    pls.read("overlap", pl.overlap);
    pls.read("signal", pl.signal);
    pls.read("poly_degree", pl.poly_degree);
    std::string regime = to_string(pl.regime);
    pls.read("regime", regime);
    pl.regime = regime_from_string(regime);
    pls.finish();

    top.finish();
    cfg.validate();
    return cfg;
}

double photon_number(const RunConfig& cfg) {
    if (cfg.adiabatic.rates == RateSource::PhotonNumber || cfg.adiabatic.rates == RateSource::Explicit) {
        return cfg.adiabatic.n0;
    }
    const double a0 = 2.0 * cfg.params.E / cfg.params.kappa;
    return a0 * a0;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw Error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// json has no inf; non-finite values become null
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string indexed_name(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04zu.csv", prefix.c_str(), i);
    return buf;
}

std::string file_prefix(Model m) {
    switch (m) {
        case Model::FullSme: return "traj";
        case Model::Bloch: return "bloch";
        case Model::Polar: return "polar";
        case Model::Telegraph: return "telegraph";
    }
    return "traj";
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

adiabatic::AdiabaticParams RunConfig::rates() const {
    const auto& a = adiabatic;
    switch (a.rates) {
        case RateSource::Dispersive: {
            auto r = adiabatic::derive_dispersive(params);
            r.eta = params.eta;
            return r;
        }
        case RateSource::Literal: return adiabatic::derive_adiabatic(params);
        case RateSource::PhotonNumber:
            return adiabatic::from_photon_number(params.omega, params.chi, params.kappa, a.n0, params.gamma, params.eta);
        case RateSource::Explicit:
            return adiabatic::AdiabaticParams::from_rates(params.omega, a.delta, a.gamma_m, params.gamma, params.eta);
    }
    return {};
}

adiabatic::JumpRates RunConfig::telegraph_rates() const {
    if (telegraph.mu && telegraph.nu) return {*telegraph.mu, *telegraph.nu};
    const auto r = rates();
    auto jr = adiabatic::jump_rates(r.omega, r.gamma_m, r.gamma);
    if (telegraph.mu) jr.mu = *telegraph.mu;
    if (telegraph.nu) jr.nu = *telegraph.nu;
    return jr;
}

bool RunConfig::jump_regime() const {
    if (pipeline.regime != RegimeHint::Auto) return pipeline.regime == RegimeHint::Jump;
    if (model == Model::Telegraph) return true;
    const auto r = rates();
    return adiabatic::regime_classify(r.omega, r.gamma_m) == adiabatic::Regime::OverDamped;
}

double RunConfig::cutoff_multiplier() const {
    if (pipeline.cutoff_multiplier) return *pipeline.cutoff_multiplier;
    return jump_regime() ? 2.5 : 1.0;
}

double RunConfig::cutoff() const {
    if (model == Model::Telegraph) {
        // no drive frequency: well above the faster switching rate
        const auto jr = telegraph_rates();
        return cutoff_multiplier() * 10.0 * std::max(jr.mu, jr.nu);
    }
    return cutoff_multiplier() * params.omega / std::numbers::pi;
}

std::string RunConfig::signal_column() const {
    if (pipeline.signal != "auto") return pipeline.signal;
    switch (model) {
        case Model::FullSme: return "x";
        case Model::Telegraph: return "state";
        default: return "z";
    }
}

void RunConfig::validate() const {
    if (n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    as_config_error([&] { return params.validate(); });
    const auto& a = adiabatic;
    if (!(a.dt > 0.0)) throw ConfigError("adiabatic.dt must be > 0");
    if (!(a.duration > 0.0)) throw ConfigError("adiabatic.duration must be > 0");
    if (a.record_every < 1) throw ConfigError("adiabatic.record_every must be >= 1");
    if (!(a.n0 >= 0.0)) throw ConfigError("adiabatic.n0 must be >= 0");
    if (!(a.gamma_m >= 0.0)) throw ConfigError("adiabatic.gamma_m must be >= 0");
    if (model == Model::Bloch || model == Model::Polar || model == Model::Telegraph) {
        as_config_error([&] {
            rates().validate();
            return 0;
        });
    }
    const auto& t = telegraph;
    if (t.mu && !(*t.mu >= 0.0)) throw ConfigError("telegraph.mu must be >= 0");
    if (t.nu && !(*t.nu >= 0.0)) throw ConfigError("telegraph.nu must be >= 0");
    if (!(t.duration > 0.0)) throw ConfigError("telegraph.duration must be > 0");
    if (!(t.sample_dt > 0.0)) throw ConfigError("telegraph.sample_dt must be > 0");
    if (model == Model::Telegraph) {
        const auto jr = as_config_error([&] { return telegraph_rates(); });
        if (!(jr.mu > 0.0) && !(jr.nu > 0.0)) throw ConfigError("telegraph rates mu and nu are both zero");
    }
    const auto& pl = pipeline;
    if (pl.cutoff_multiplier && !(*pl.cutoff_multiplier > 0.0)) {
        throw ConfigError("pipeline.cutoff_multiplier must be > 0");
    }
    if (pl.segment_length < 16) throw ConfigError("pipeline.segment_length must be >= 16");
    if (!(pl.overlap >= 0.0 && pl.overlap < 1.0)) throw ConfigError("pipeline.overlap must lie in [0, 1)");
    if (pl.poly_degree < 0 || pl.poly_degree > 6) throw ConfigError("pipeline.poly_degree must lie in [0, 6]");
    static const std::set<std::string> signals{"auto", "z", "x", "current", "state"};
    if (!signals.count(pl.signal)) throw ConfigError("unknown pipeline.signal '" + pl.signal + "'");
}

RunConfig config_parse(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    return parse_node(root);
}

RunConfig config_load(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return config_parse(ss.str());
}

json config_to_json(const RunConfig& cfg) {
    const auto& p = cfg.params;
    const auto& a = cfg.adiabatic;
    const auto& t = cfg.telegraph;
    const auto& pl = cfg.pipeline;
    json j;
    j["model"] = to_string(cfg.model);
    j["seed"] = cfg.seed;
    j["n_trajectories"] = cfg.n_trajectories;
    j["threads"] = cfg.threads;
    j["output"] = cfg.output;
    j["params"] = {{"E", p.E},
                   {"omega", p.omega},
                   {"chi", p.chi},
                   {"gamma", p.gamma},
                   {"kappa", p.kappa},
                   {"eta", p.eta},
                   {"n_max", p.n_max},
                   {"dt", p.dt},
                   {"duration", p.duration},
                   {"current_convention", sme::to_string(p.current)},
                   {"integrator", sme::to_string(p.integrator)},
                   {"record_every", p.record_every},
                   {"positivity_check_every", p.positivity_check_every}};
    j["adiabatic"] = {{"rates", to_string(a.rates)},
                      {"n0", a.n0},
                      {"delta", a.delta},
                      {"gamma_m", a.gamma_m},
                      {"noise", adiabatic::to_string(a.noise)},
                      {"milstein", a.milstein},
                      {"efficiency_scaled_noise", a.efficiency_scaled_noise},
                      {"dt", a.dt},
                      {"duration", a.duration},
                      {"record_every", a.record_every}};
    j["telegraph"] = {{"mu", t.mu ? json(*t.mu) : json("auto")},
                      {"nu", t.nu ? json(*t.nu) : json("auto")},
                      {"duration", t.duration},
                      {"sample_dt", t.sample_dt}};
    j["pipeline"] = {{"cutoff_multiplier", pl.cutoff_multiplier ? json(*pl.cutoff_multiplier) : json("auto")},
                     {"threshold", pl.threshold ? json(*pl.threshold) : json("auto")},
                     {"segment_length", pl.segment_length},
                     {"overlap", pl.overlap},
                     {"signal", pl.signal},
                     {"poly_degree", pl.poly_degree},
                     {"regime", to_string(pl.regime)}};
    return j;
}

json RunManifest::to_json() const {
    json j;
    j["stoq_manifest"] = 1;
    j["command"] = command;
    j["version"] = version;
    j["config"] = config;
    j["seeds"] = seeds;
    j["outputs"] = outputs;
    j["wall_clock_s"] = wall_clock_s;
    j["warnings"] = warnings;
    j["summary"] = summary;
    return j;
}

RunManifest run_simulate(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    RunManifest man;
    man.command = "simulate";
    man.config = config_to_json(cfg);
    man.version = version();
    const auto n = static_cast<std::size_t>(cfg.n_trajectories);
    for (std::size_t i = 0; i < n; ++i) {
        man.seeds.push_back(cfg.seed + i);
        man.outputs.push_back(indexed_name(file_prefix(cfg.model), i));
    }

    std::vector<json> per(n);
    std::vector<std::vector<std::string>> warns(n);
    io::parallel_for(n, cfg.threads, [&](std::size_t i) {
        const std::uint64_t seed = cfg.seed + i;
        std::ostringstream os;
        json info = {{"index", i}, {"seed", seed}, {"stream", i}, {"file", man.outputs[i]}};
        try {
            switch (cfg.model) {
                case Model::FullSme: {
                    sme::FullSystemParams p = cfg.params;
                    p.seed = seed;
                    sme::SimulationOptions opts;
                    opts.stream = i;
                    const auto rec = sme::simulate_conditional(p, opts);
                    sme::write_trajectory_csv(rec, os);
                    info["positivity_min"] = rec.positivity_min;
                    info["max_photon_number"] = rec.max_photon_number;
                    info["max_top_fock_population"] = rec.max_top_population;
                    warns[i] = rec.warnings;
                    break;
                }
                case Model::Bloch: {
                    adiabatic::BlochOptions opts;
                    opts.dt = cfg.adiabatic.dt;
                    opts.duration = cfg.adiabatic.duration;
                    opts.seed = seed;
                    opts.stream = i;
                    opts.noise = cfg.adiabatic.noise;
                    opts.efficiency_scaled_noise = cfg.adiabatic.efficiency_scaled_noise;
                    opts.milstein = cfg.adiabatic.milstein;
                    opts.record_every = cfg.adiabatic.record_every;
                    const auto s = adiabatic::simulate_bloch(cfg.rates(), opts);
                    adiabatic::write_bloch_csv(s, os);
                    info["max_radius_deviation"] = s.max_radius_deviation;
                    break;
                }
                case Model::Polar: {
                    adiabatic::PolarOptions opts;
                    opts.dt = cfg.adiabatic.dt;
                    opts.duration = cfg.adiabatic.duration;
                    opts.seed = seed;
                    opts.stream = i;
                    opts.record_every = cfg.adiabatic.record_every;
                    const auto s = adiabatic::simulate_polar(cfg.rates(), opts);
                    adiabatic::write_polar_csv(s, os);
                    break;
                }
                case Model::Telegraph: {
                    const auto s = adiabatic::simulate_telegraph(cfg.telegraph_rates(), cfg.telegraph.duration, seed, i);
                    adiabatic::write_telegraph_csv(s, cfg.telegraph.sample_dt, os);
                    info["up_jumps"] = s.up_jumps();
                    info["jumps"] = s.jump_times.size();
                    break;
                }
            }
        } catch (const Error& e) {
            throw Error("trajectory " + std::to_string(i) + ": " + e.what());
        }
        write_text(out_dir / man.outputs[i], os.str());
        per[i] = std::move(info);
    });

    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& w : warns[i]) man.warnings.push_back("trajectory " + std::to_string(i) + ": " + w);
    }
    man.summary["model"] = to_string(cfg.model);
    man.summary["trajectories"] = per;
    if (cfg.model != Model::FullSme || cfg.params.kappa > 0.0) {
        const auto r = cfg.rates();
        man.summary["rates"] = {{"omega", r.omega},         {"delta", r.delta}, {"gamma_m", r.gamma_m},
                                {"gamma", r.gamma},         {"gamma2", r.gamma2}, {"omega_eff", r.omega_eff},
                                {"regime", cfg.jump_regime() ? "jump" : "rabi"}};
    }
    man.wall_clock_s = elapsed_since(t0);
    write_json(out_dir / "manifest.json", man.to_json());
    return man;
}

namespace {

// transient of the second-order low-pass decays as exp(-4.44 fc t)
constexpr double kSettleCycles = 5.0;

struct Series {
    std::vector<double> values;
    std::vector<double> z;  // population proxy for the dissipation average
    double fs = 0.0;
};

Series load_series(const fs::path& path, Model model, const std::string& signal) {
    const auto table = io::read_csv_file(path.string());
    if (table.rows.size() < 2) throw Error(path.string() + ": fewer than 2 samples");
    auto col = [&](std::initializer_list<const char*> names) -> std::vector<double> {
        for (const char* name : names) {
            const int c = table.column(name);
            if (c >= 0) return table.column_values(c);
        }
        throw Error(path.string() + ": missing column '" + *names.begin() + "'");
    };
    Series s;
    const auto t = col({"t"});
    s.fs = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    if (!(s.fs > 0.0) || !std::isfinite(s.fs)) throw Error(path.string() + ": time column is not increasing");

    if (model == Model::Polar) {
        const auto theta = col({"theta"});
        const auto phi = col({"phi"});
        s.z.resize(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) s.z[i] = std::cos(theta[i]);
        if (signal == "x") {
            s.values.resize(theta.size());
            for (std::size_t i = 0; i < theta.size(); ++i) s.values[i] = std::sin(theta[i]) * std::cos(phi[i]);
        } else if (signal == "z") {
            s.values = s.z;
        } else {
            throw Error("signal '" + signal + "' is not available for the polar model");
        }
        return s;
    }
    if (model == Model::Telegraph) {
        if (signal != "state") throw Error("signal '" + signal + "' is not available for the telegraph model");
        s.values = col({"state"});
        s.z = s.values;
        return s;
    }
    s.z = col({"z", "Z"});
    if (signal == "z") {
        s.values = s.z;
    } else if (signal == "x") {
        s.values = col({"x", "X"});
    } else if (signal == "current" && model == Model::FullSme) {
        s.values = col({"current"});
    } else {
        throw Error("signal '" + signal + "' is not available for the " + to_string(model) + " model");
    }
    return s;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

RunManifest run_analyze(const RunConfig& cfg, const fs::path& in_dir, const fs::path& out_dir) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    if (!fs::is_directory(in_dir)) throw Error("input directory " + in_dir.string() + " does not exist");
    const std::string prefix = file_prefix(cfg.model) + "_";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in_dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.rfind(prefix, 0) == 0 && e.path().extension() == ".csv") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no " + prefix + "*.csv files in " + in_dir.string());
    fs::create_directories(out_dir);

    RunManifest man;
    man.command = "analyze";
    man.config = config_to_json(cfg);
    man.version = version();

    const std::string column = cfg.signal_column();
    const bool jump = cfg.jump_regime();
    const double cutoff = cfg.cutoff();
    // z and state are low in the ground state; x and the current track -z
    const bool ground_below = column == "z" || column == "state";

    std::vector<Series> series;
    for (const auto& f : files) series.push_back(load_series(f, cfg.model, column));
    std::size_t shortest = series.front().values.size();
    for (const auto& s : series) shortest = std::min(shortest, s.values.size());
    const std::size_t seg = std::min(cfg.pipeline.segment_length, shortest);
    const double fs_rate = series.front().fs;

    signal::PeriodSet pooled;
    pooled.cutoff = cutoff;
    signal::Psd psd;
    std::vector<double> thresholds;
    double ground_weighted = 0.0;
    double samples_total = 0.0;
    double segments_total = 0.0;
    double ground_time_total = 0.0;
    double z_sum = 0.0;
    double z_count = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        if (std::abs(s.fs - fs_rate) > 1e-6 * fs_rate) throw Error(files[k].string() + ": sampling rate differs");
        z_sum += std::accumulate(s.z.begin(), s.z.end(), 0.0);
        z_count += static_cast<double>(s.z.size());

        const auto sig = signal::ingest_real(s.values, s.fs);
        const double fc = std::min(cutoff, 0.45 * s.fs);
        const auto filtered = signal::butter2_lowpass(sig, fc);
        const auto clock = signal::binarize_and_periods(filtered);
        // edges inside the filter's settling time are dropped
        const double settle = kSettleCycles / fc;
        double prev_edge = -1.0;
        for (double edge : clock.rising_edges) {
            if (edge < settle) continue;
            if (prev_edge >= 0.0) pooled.periods.push_back(edge - prev_edge);
            prev_edge = edge;
        }

        const auto part = signal::periodogram(sig, seg, cfg.pipeline.overlap);
        if (k == 0) {
            psd = part;
        } else {
            for (std::size_t b = 0; b < psd.power.size(); ++b) psd.power[b] += part.power[b];
            psd.segments += part.segments;
        }

        if (jump) {
            const double thr = cfg.pipeline.threshold ? *cfg.pipeline.threshold : signal::otsu_threshold(filtered.samples);
            thresholds.push_back(thr);
            const auto ts = signal::telegraph_stats(filtered, thr, ground_below);
            const double n = static_cast<double>(filtered.samples.size());
            ground_weighted += ts.ground_fraction * n;
            samples_total += n;
            if (ts.up_rate) {
                segments_total += static_cast<double>(ts.ground_segments);
                ground_time_total += static_cast<double>(ts.ground_segments) / *ts.up_rate;
            }
        }
    }
    for (double& v : psd.power) v /= static_cast<double>(series.size());
    pooled.threshold = 0.0;

    {
        std::ostringstream os;
        signal::write_periods_csv(pooled, os);
        write_text(out_dir / "periods.csv", os.str());
        man.outputs.push_back("periods.csv");
    }

    // PSD peak position within the analysis band, DC bin excluded
    std::size_t peak_bin = 0;
    if (psd.power.size() > 1) {
        peak_bin = static_cast<std::size_t>(std::max_element(psd.power.begin() + 1, psd.power.end()) -
                                            psd.power.begin());
    }
    const double band = psd.freqs.empty() ? 0.0 : psd.freqs.back();
    json summary;
    summary["signal"] = column;
    summary["regime"] = jump ? "jump" : "rabi";
    summary["cutoff"] = cutoff;
    summary["settle_time"] = kSettleCycles / std::min(cutoff, 0.45 * fs_rate);
    summary["trajectories"] = files.size();
    summary["psd_peak_freq"] = psd.freqs.empty() ? 0.0 : psd.freqs[peak_bin];
    summary["psd_band"] = band;
    summary["psd_peak_fraction"] = band > 0.0 ? psd.freqs[peak_bin] / band : 0.0;
    summary["mean_z"] = z_count > 0.0 ? z_sum / z_count : 0.0;

    // Lorentzian fit within ten bare Rabi frequencies (or the whole band)
    json lorentz;
    std::vector<double> floor_curve;
    signal::Psd fit_psd = psd;
    {
        const double f_max = cfg.model == Model::Telegraph ? band : 10.0 * cfg.params.omega / std::numbers::pi;
        std::size_t keep = 0;
        while (keep < fit_psd.freqs.size() && fit_psd.freqs[keep] <= f_max) ++keep;
        if (keep >= 16) {
            fit_psd.freqs.resize(keep);
            fit_psd.power.resize(keep);
        }
    }
    try {
        const auto fl = signal::noise_floor_subtract(fit_psd, cfg.pipeline.poly_degree);
        floor_curve = fl.floor;
        const auto lf = signal::lorentzian_fit(fl.subtracted);
        lorentz = {{"f0", lf.f0},
                   {"half_width", lf.half_width},
                   {"width", lf.width()},
                   {"amplitude", lf.amplitude},
                   {"offset", lf.offset},
                   {"residual", lf.residual},
                   {"amplitude_sigma", number(lf.amplitude_sigma)},
                   {"iterations", lf.iterations},
                   {"floor_coefficients", fl.coefficients},
                   {"warnings", lf.warnings}};
        summary["f0"] = lf.f0;
        for (const auto& w : lf.warnings) man.warnings.push_back("lorentzian: " + w);
    } catch (const Error& e) {
        lorentz = {{"error", e.what()}};
        man.warnings.push_back(std::string("lorentzian fit failed: ") + e.what());
    }
    lorentz["band_max"] = fit_psd.freqs.empty() ? 0.0 : fit_psd.freqs.back();
    write_json(out_dir / "lorentz.json", lorentz);
    man.outputs.push_back("lorentz.json");

    {
        std::ostringstream os;
        os << "freq,power,floor\n";
        for (std::size_t b = 0; b < psd.freqs.size(); ++b) {
            os << io::format_number(psd.freqs[b]) << ',' << io::format_number(psd.power[b]) << ',';
            if (b < floor_curve.size()) os << io::format_number(floor_curve[b]);
            os << '\n';
        }
        write_text(out_dir / "psd.csv", os.str());
        man.outputs.push_back("psd.csv");
    }

    const auto& P = pooled.periods;
    summary["periods"] = P.size();
    if (P.empty()) man.warnings.push_back("empty period set");

    if (!jump) {
        json wald;
        try {
            const auto fit = stats::invgauss_fit(P);
            const double var = fit.degenerate ? 0.0 : fit.params.m * fit.params.m * fit.params.m / fit.params.lambda;
            wald = {{"m", fit.params.m},
                    {"lambda", number(fit.params.lambda)},
                    {"variance", var},
                    {"snr", number(fit.degenerate ? INFINITY : std::sqrt(fit.params.lambda / fit.params.m))},
                    {"ks", fit.ks},
                    {"ks_pvalue", fit.ks_pvalue},
                    {"n", fit.n},
                    {"degenerate", fit.degenerate}};
            summary["wald_m"] = fit.params.m;
            summary["wald_lambda"] = number(fit.params.lambda);
            summary["snr"] = wald["snr"];
            if (fit.degenerate) man.warnings.push_back("inverse Gaussian fit degenerate: lambda = inf");
        } catch (const Error& e) {
            wald = {{"error", e.what()}, {"n", P.size()}};
            man.warnings.push_back(std::string("inverse Gaussian fit failed: ") + e.what());
        }
        if (cfg.model != Model::Telegraph) {
            const auto r = cfg.rates();
            if (r.omega > 0.0 && r.gamma_m > 0.0) {
                const auto w = stats::wald_moments(r.omega, r.gamma_m);
                wald["closed_form"] = {{"m", w.params.m},
                                       {"lambda", w.params.lambda},
                                       {"variance", w.variance},
                                       {"snr", w.snr},
                                       {"m_effective", std::numbers::pi / r.omega_eff}};
            }
        }
        write_json(out_dir / "wald.json", wald);
        man.outputs.push_back("wald.json");
    } else {
        const auto jr = cfg.telegraph_rates();
        json jj;
        try {
            const auto d = stats::jump_period_dist(jr);
            jj = {{"mu", d.mu}, {"nu", d.nu}, {"mean", d.mean}, {"var", d.variance}};
        } catch (const Error& e) {
            jj = {{"mu", jr.mu}, {"nu", jr.nu}, {"error", e.what()}};
        }
        jj["empirical_n"] = P.size();
        if (!P.empty()) {
            const double m = mean_of(P);
            double v = 0.0;
            for (double t : P) v += (t - m) * (t - m);
            jj["empirical_mean"] = m;
            jj["empirical_var"] = P.size() > 1 ? v / static_cast<double>(P.size() - 1) : 0.0;
        }
        write_json(out_dir / "jump.json", jj);
        man.outputs.push_back("jump.json");

        json tel;
        tel["ground_fraction"] = samples_total > 0.0 ? ground_weighted / samples_total : 0.0;
        tel["ground_segments"] = segments_total;
        tel["thresholds"] = thresholds;
        tel["ground_below"] = ground_below;
        if (segments_total > 0.0) {
            tel["up_rate"] = segments_total / ground_time_total;
            summary["up_rate"] = tel["up_rate"];
        } else {
            tel["up_rate"] = nullptr;
            man.warnings.push_back("no complete ground segment; up rate undefined");
        }
        tel["predicted_mu"] = jr.mu;
        tel["predicted_ground_fraction"] = jr.mu + jr.nu > 0.0 ? jr.nu / (jr.mu + jr.nu) : 1.0;
        summary["ground_fraction"] = tel["ground_fraction"];
        write_json(out_dir / "telegraph.json", tel);
        man.outputs.push_back("telegraph.json");
    }

    man.summary = summary;
    man.wall_clock_s = elapsed_since(t0);
    write_json(out_dir / "manifest.json", man.to_json());
    return man;
}

RunConfig with_sweep_value(const RunConfig& cfg, const std::string& variable, double value) {
    RunConfig out = cfg;
    if (variable == "Omega" || variable == "omega") {
        out.params.omega = value;
    } else if (variable == "E") {
        out.params.E = value;
    } else if (variable == "n0") {
        if (cfg.adiabatic.rates == RateSource::PhotonNumber || cfg.adiabatic.rates == RateSource::Explicit) {
            out.adiabatic.n0 = value;
        } else {
            if (!(value >= 0.0)) throw ConfigError("n0 must be >= 0");
            // n0 = |2E/kappa|^2
            out.params.E = 0.5 * cfg.params.kappa * std::sqrt(value);
        }
    } else {
        throw ConfigError("unknown sweep variable '" + variable + "' (expected Omega, E or n0)");
    }
    return out;
}

SweepResult run_sweep(const RunConfig& cfg, const SweepSpec& spec, const fs::path& out_dir) {
    cfg.validate();
    if (spec.values.size() < 3) throw ConfigError("a sweep needs at least 3 values");
    with_sweep_value(cfg, spec.variable, spec.values.front());
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    SweepResult res;
    auto& man = res.manifest;
    man.command = "sweep";
    man.config = config_to_json(cfg);
    man.version = version();
    for (int i = 0; i < cfg.n_trajectories; ++i) man.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));

    json points = json::array();
    for (std::size_t k = 0; k < spec.values.size(); ++k) {
        SweepRow row;
        row.value = spec.values[k];
        char name[32];
        std::snprintf(name, sizeof name, "point_%02zu", k);
        const fs::path dir = out_dir / name;
        json point = {{"index", k}, {"value", row.value}, {"dir", name}};
        try {
            const RunConfig pc = with_sweep_value(cfg, spec.variable, row.value);
            pc.validate();
            const auto sim = run_simulate(pc, dir / "sim");
            const auto ana = run_analyze(pc, dir / "sim", dir / "analysis");
            const auto& s = ana.summary;
            auto get = [&](const char* key) {
                return s.contains(key) && s[key].is_number() ? s[key].get<double>() : std::nan("");
            };
            row.f0 = get("f0");
            row.wald_m = get("wald_m");
            row.wald_lambda = get("wald_lambda");
            row.snr = get("snr");
            row.ground_fraction = get("ground_fraction");
            row.up_rate = get("up_rate");
            const double n0 = photon_number(pc);
            row.kappa_n0 = pc.params.kappa * n0;
            if (pc.model != Model::Telegraph) {
                const auto r = pc.rates();
                row.lambda_closed = r.gamma_m > 0.0 ? std::numbers::pi / r.gamma_m : INFINITY;
            } else {
                row.lambda_closed = std::nan("");
            }
            const double z = std::clamp(get("mean_z"), -1.0, 1.0);
            row.dissipation = stats::dissipation_rate({pc.params.kappa, n0, pc.params.gamma, 1.0, 1.0}, z);
            for (const auto& w : sim.warnings) man.warnings.push_back(std::string(name) + ": " + w);
            for (const auto& w : ana.warnings) man.warnings.push_back(std::string(name) + ": " + w);
        } catch (const std::exception& e) {
            const double nan = std::nan("");
            row = SweepRow{row.value, nan, nan, nan, nan, nan, nan, nan, nan, nan, std::string("failed: ") + e.what()};
            man.warnings.push_back(std::string(name) + " " + row.status);
        }
        point["status"] = row.status;
        points.push_back(point);
        res.rows.push_back(row);
    }

    std::ostringstream os;
    os << "value,f0,wald_m,wald_lambda,snr,lambda_closed,kappa_n0,dissipation,ground_fraction,up_rate,status\n";
    auto cell = [](double v) { return std::isnan(v) ? std::string() : io::format_number(v); };
    for (const auto& r : res.rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        os << cell(r.value) << ',' << cell(r.f0) << ',' << cell(r.wald_m) << ',' << cell(r.wald_lambda) << ','
           << cell(r.snr) << ',' << cell(r.lambda_closed) << ',' << cell(r.kappa_n0) << ',' << cell(r.dissipation)
           << ',' << cell(r.ground_fraction) << ',' << cell(r.up_rate) << ',' << status << '\n';
    }
    write_text(out_dir / "summary.csv", os.str());
    man.outputs.push_back("summary.csv");
    man.summary = {{"variable", spec.variable}, {"values", spec.values}, {"points", points}};
    man.wall_clock_s = elapsed_since(t0);
    write_json(out_dir / "manifest.json", man.to_json());
    return res;
}

}  // namespace stoq::harness
