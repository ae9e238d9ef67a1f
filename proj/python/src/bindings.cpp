#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <vector>

#include "stoq/adiabatic.hpp"
#include "stoq/harness.hpp"
#include "stoq/signal.hpp"
#include "stoq/sme.hpp"
#include "stoq/stats.hpp"

namespace py = pybind11;
using namespace stoq;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

py::object from_json(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

py::dict trajectory_dict(const sme::TrajectoryRecord& r) {
    py::dict d;
    d["times"] = to_array(r.times);
    d["z"] = to_array(r.z);
    d["x"] = to_array(r.x);
    d["n"] = to_array(r.n);
    d["current"] = to_array(r.current);
    d["positivity_min"] = r.positivity_min;
    d["max_photon_number"] = r.max_photon_number;
    d["warnings"] = r.warnings;
    return d;
}

// the GIL is released only around pure C++ work
template <class F>
auto unlocked(F&& f) {
    py::gil_scoped_release release;
    return f();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Measurement-driven qubit clock: simulators and clock statistics";

    static py::exception<Error> stoq_error(m, "StoqError", PyExc_RuntimeError);
    static py::exception<harness::ConfigError> config_error(m, "ConfigError", stoq_error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const harness::ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const Error& e) {
            py::set_error(stoq_error, e.what());
        }
    });

    m.def("version", &harness::version);

    py::class_<sme::FullSystemParams>(m, "FullSystemParams")
        .def(py::init<>())
        .def_readwrite("E", &sme::FullSystemParams::E)
        .def_readwrite("omega", &sme::FullSystemParams::omega)
        .def_readwrite("chi", &sme::FullSystemParams::chi)
        .def_readwrite("gamma", &sme::FullSystemParams::gamma)
        .def_readwrite("kappa", &sme::FullSystemParams::kappa)
        .def_readwrite("eta", &sme::FullSystemParams::eta)
        .def_readwrite("n_max", &sme::FullSystemParams::n_max)
        .def_readwrite("dt", &sme::FullSystemParams::dt)
        .def_readwrite("duration", &sme::FullSystemParams::duration)
        .def_readwrite("seed", &sme::FullSystemParams::seed)
        .def_readwrite("record_every", &sme::FullSystemParams::record_every)
        .def_property(
            "integrator", [](const sme::FullSystemParams& p) { return sme::to_string(p.integrator); },
            [](sme::FullSystemParams& p, const std::string& s) { p.integrator = sme::integrator_from_string(s); })
        .def("validate", &sme::FullSystemParams::validate)
        .def("__repr__", [](const sme::FullSystemParams& p) {
            return "FullSystemParams(E=" + std::to_string(p.E) + ", omega=" + std::to_string(p.omega) +
                   ", n_max=" + std::to_string(p.n_max) + ", duration=" + std::to_string(p.duration) + ")";
        });

    m.def(
        "simulate_conditional",
        [](const sme::FullSystemParams& p, std::uint64_t stream) {
            sme::SimulationOptions o;
            o.stream = stream;
            return trajectory_dict(unlocked([&] { return sme::simulate_conditional(p, o); }));
        },
        py::arg("params"), py::arg("stream") = 0);
    m.def(
        "simulate_unconditional",
        [](const sme::FullSystemParams& p) {
            return trajectory_dict(unlocked([&] { return sme::simulate_unconditional(p); }));
        },
        py::arg("params"));
    m.def("steady_alpha", &sme::steady_alpha, py::arg("E"), py::arg("kappa"));

    py::class_<adiabatic::AdiabaticParams>(m, "AdiabaticParams")
        .def_static("from_rates", &adiabatic::AdiabaticParams::from_rates, py::arg("omega"), py::arg("delta"),
                    py::arg("gamma_m"), py::arg("gamma"), py::arg("eta") = 1.0)
        .def_readonly("omega", &adiabatic::AdiabaticParams::omega)
        .def_readonly("delta", &adiabatic::AdiabaticParams::delta)
        .def_readonly("gamma_m", &adiabatic::AdiabaticParams::gamma_m)
        .def_readonly("gamma", &adiabatic::AdiabaticParams::gamma)
        .def_readonly("gamma2", &adiabatic::AdiabaticParams::gamma2)
        .def_readonly("g", &adiabatic::AdiabaticParams::g)
        .def_readonly("eta", &adiabatic::AdiabaticParams::eta)
        .def_readonly("omega_eff", &adiabatic::AdiabaticParams::omega_eff);
    m.def("derive_adiabatic", &adiabatic::derive_adiabatic, py::arg("params"));
    m.def("derive_dispersive", &adiabatic::derive_dispersive, py::arg("params"));
    m.def("from_photon_number", &adiabatic::from_photon_number, py::arg("omega"), py::arg("chi"), py::arg("kappa"),
          py::arg("n0"), py::arg("gamma"), py::arg("eta") = 1.0);
    m.def("regime", [](double omega, double gamma_m) {
        return adiabatic::to_string(adiabatic::regime_classify(omega, gamma_m));
    });

    m.def(
        "simulate_bloch",
        [](const adiabatic::AdiabaticParams& p, double dt, double duration, std::uint64_t seed,
           const std::string& noise, bool milstein, int record_every) {
            adiabatic::BlochOptions o;
            o.dt = dt;
            o.duration = duration;
            o.seed = seed;
            o.noise = adiabatic::noise_mode_from_string(noise);
            o.milstein = milstein;
            o.record_every = record_every;
            const auto s = unlocked([&] { return adiabatic::simulate_bloch(p, o); });
            std::vector<double> x, y, z;
            for (const auto& st : s.states) {
                x.push_back(st.x);
                y.push_back(st.y);
                z.push_back(st.z);
            }
            py::dict d;
            d["times"] = to_array(s.times);
            d["x"] = to_array(x);
            d["y"] = to_array(y);
            d["z"] = to_array(z);
            d["max_radius_deviation"] = s.max_radius_deviation;
            return d;
        },
        py::arg("params"), py::arg("dt") = 1e-3, py::arg("duration") = 100.0, py::arg("seed") = 0,
        py::arg("noise") = "full", py::arg("milstein") = true, py::arg("record_every") = 1);

    m.def(
        "sample_first_passage",
        [](double omega, double gamma_m, double dt, std::size_t n, std::uint64_t seed) {
            return to_array(unlocked([&] { return adiabatic::sample_first_passage(omega, gamma_m, dt, n, seed); }));
        },
        py::arg("omega"), py::arg("gamma_m"), py::arg("dt"), py::arg("n_samples"), py::arg("seed"));

    m.def(
        "jump_rates",
        [](double omega, double gamma_m, double gamma) {
            const auto r = adiabatic::jump_rates(omega, gamma_m, gamma);
            return py::make_tuple(r.mu, r.nu);
        },
        py::arg("omega"), py::arg("gamma_m"), py::arg("gamma"));

    m.def(
        "simulate_telegraph",
        [](double mu, double nu, double duration, std::uint64_t seed) {
            const auto s = adiabatic::simulate_telegraph({mu, nu}, duration, seed);
            py::dict d;
            d["jump_times"] = to_array(s.jump_times);
            d["states"] = s.states;
            d["periods"] = to_array(s.periods());
            d["up_jumps"] = s.up_jumps();
            d["ground_dwell"] = to_array(s.dwell_times(-1));
            d["excited_dwell"] = to_array(s.dwell_times(1));
            return d;
        },
        py::arg("mu"), py::arg("nu"), py::arg("duration"), py::arg("seed"));

    m.def(
        "butter2_lowpass",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double fs, double fc) {
            return to_array(signal::butter2_lowpass(signal::ingest_real(to_vector(x), fs), fc).samples);
        },
        py::arg("samples"), py::arg("fs"), py::arg("fc"));

    m.def(
        "clock_periods",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double fs) {
            const auto c = signal::binarize_and_periods(signal::ingest_real(to_vector(x), fs));
            py::dict d;
            d["periods"] = to_array(c.periods.periods);
            d["rising_edges"] = to_array(c.rising_edges);
            d["warnings"] = c.periods.warnings;
            return d;
        },
        py::arg("samples"), py::arg("fs"));

    m.def(
        "periodogram",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double fs,
           std::size_t segment_length, double overlap) {
            const auto p = signal::periodogram(signal::ingest_real(to_vector(x), fs), segment_length, overlap);
            return py::make_tuple(to_array(p.freqs), to_array(p.power));
        },
        py::arg("samples"), py::arg("fs"), py::arg("segment_length"), py::arg("overlap") = 0.5);

    m.def(
        "lorentzian_fit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& power) {
            signal::Psd psd;
            psd.freqs = to_vector(f);
            psd.power = to_vector(power);
            const auto fit = signal::lorentzian_fit(psd);
            py::dict d;
            d["f0"] = fit.f0;
            d["half_width"] = fit.half_width;
            d["amplitude"] = fit.amplitude;
            d["offset"] = fit.offset;
            d["residual"] = fit.residual;
            d["warnings"] = fit.warnings;
            return d;
        },
        py::arg("freqs"), py::arg("power"));

    m.def(
        "wald_moments",
        [](double omega, double gamma_m) {
            const auto w = stats::wald_moments(omega, gamma_m);
            py::dict d;
            d["m"] = w.params.m;
            d["lambda"] = w.params.lambda;
            d["variance"] = w.variance;
            d["snr"] = w.snr;
            return d;
        },
        py::arg("omega"), py::arg("gamma_m"));

    m.def(
        "invgauss_fit",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& periods) {
            const auto v = to_vector(periods);
            const auto fit = stats::invgauss_fit(v);
            py::dict d;
            d["m"] = fit.params.m;
            d["lambda"] = fit.params.lambda;
            d["n"] = fit.n;
            d["degenerate"] = fit.degenerate;
            d["ks"] = fit.ks;
            d["ks_pvalue"] = fit.ks_pvalue;
            return d;
        },
        py::arg("periods"));

    m.def(
        "statistical_distance_rate",
        [](const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& drho) {
            const auto r = stats::statistical_distance_rate(rho, drho);
            py::dict d;
            d["rate2"] = r.rate2;
            d["linear_entropy"] = r.linear_entropy;
            d["diverged"] = r.diverged;
            if (r.has_bloch) d["bloch_rate2"] = r.bloch_rate2;
            return d;
        },
        py::arg("rho"), py::arg("drho_dt"));

    py::class_<harness::RunConfig>(m, "Config")
        .def_static("load", &harness::config_load, py::arg("path"))
        .def_static("parse", &harness::config_parse, py::arg("text"))
        .def_readwrite("seed", &harness::RunConfig::seed)
        .def_readwrite("threads", &harness::RunConfig::threads)
        .def_readwrite("n_trajectories", &harness::RunConfig::n_trajectories)
        .def("to_dict", [](const harness::RunConfig& c) { return from_json(harness::config_to_json(c)); });

    m.def(
        "simulate",
        [](const harness::RunConfig& cfg, const std::filesystem::path& out) {
            return from_json(unlocked([&] { return harness::run_simulate(cfg, out); }).to_json());
        },
        py::arg("config"), py::arg("out"));
    m.def(
        "analyze",
        [](const harness::RunConfig& cfg, const std::filesystem::path& in, const std::filesystem::path& out) {
            return from_json(unlocked([&] { return harness::run_analyze(cfg, in, out); }).to_json());
        },
        py::arg("config"), py::arg("input"), py::arg("out"));
    m.def(
        "sweep",
        [](const harness::RunConfig& cfg, const std::string& variable, const std::vector<double>& values,
           const std::filesystem::path& out) {
            return from_json(unlocked([&] { return harness::run_sweep(cfg, {variable, values}, out); }).manifest.to_json());
        },
        py::arg("config"), py::arg("variable"), py::arg("values"), py::arg("out"));
}
