#include "stoq/sme.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "stoq/adiabatic.hpp"
#include "stoq/io.hpp"
#include "stoq/rng.hpp"

namespace stoq::sme {

using quantum::OperatorTerms;

std::string to_string(CurrentConvention c) {
    return c == CurrentConvention::Standard ? "standard" : "paper_A5";
}

CurrentConvention current_convention_from_string(const std::string& s) {
    if (s == "standard") return CurrentConvention::Standard;
    if (s == "paper_A5") return CurrentConvention::PaperA5;
    throw Error("unknown current_convention '" + s + "' (expected standard or paper_A5)");
}

std::string to_string(Integrator i) { return i == Integrator::Rouchon ? "rouchon" : "euler_maruyama"; }

Integrator integrator_from_string(const std::string& s) {
    if (s == "rouchon") return Integrator::Rouchon;
    if (s == "euler_maruyama") return Integrator::EulerMaruyama;
    throw Error("unknown integrator '" + s + "' (expected rouchon or euler_maruyama)");
}

std::int64_t FullSystemParams::steps() const {
    return static_cast<std::int64_t>(std::llround(duration / dt));
}

std::vector<std::string> FullSystemParams::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(std::string(name) + " must be a finite rate >= 0");
    };
    nonneg(E, "E");
    nonneg(omega, "Omega");
    nonneg(chi, "chi");
    nonneg(gamma, "gamma");
    nonneg(kappa, "kappa");
    if (!(eta >= 0.0 && eta <= 1.0)) throw Error("eta must lie in [0, 1]");
    if (!(dt > 0.0)) throw Error("dt must be > 0");
    if (!(duration > 0.0)) throw Error("duration must be > 0");
    if (n_max < 1) throw Error("n_max must be >= 1");
    if (record_every < 1) throw Error("record_every must be >= 1");
    if (positivity_check_every < 1) throw Error("positivity_check_every must be >= 1");

    std::vector<std::string> warnings;
    double gamma_est = 0.0;
    if (kappa > 0.0) gamma_est = adiabatic::derive_dispersive(*this).gamma_m;
    const double fastest = std::max({kappa, gamma_est, 2.0 * omega});
    if (dt * fastest > 0.05) {
        warnings.push_back("dt * max(kappa, Gamma, 2 Omega) = " + io::format_number(dt * fastest) +
                           " exceeds 0.05");
    }
    return warnings;
}

Complex steady_alpha(double E, double kappa) {
    if (!(kappa > 0.0)) throw Error("steady_alpha: kappa must be > 0");
    return Complex(0.0, -2.0 * E / kappa);
}

namespace {

struct Operators {
    OperatorMatrix hamiltonian;
    OperatorMatrix sm;
    OperatorMatrix a;
};

Operators system_operators(const FullSystemParams& p) {
    const auto ops = quantum::build_operators(p.hilbert());
    Operators out;
    out.hamiltonian = p.E * (ops.a + ops.adag) + p.omega * ops.sx + p.chi * ops.n * ops.sz;
    out.sm = ops.sm;
    out.a = ops.a;
    return out;
}

void require_shape(const DensityMatrix& rho, const FullSystemParams& p) {
    const int d = p.hilbert().dim();
    if (rho.rows() != d || rho.cols() != d) {
        throw Error("density matrix shape " + std::to_string(rho.rows()) + "x" + std::to_string(rho.cols()) +
                    " does not match n_max = " + std::to_string(p.n_max));
    }
}

void symmetrize_and_normalize(DensityMatrix& rho) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace().real();
}

}  // namespace

OperatorMatrix liouvillian_rhs(const DensityMatrix& rho, const FullSystemParams& p) {
    require_shape(rho, p);
    const auto ops = system_operators(p);
    const Complex minus_i(0.0, -1.0);
    return minus_i * quantum::commutator(ops.hamiltonian, rho) + p.gamma * quantum::apply_dissipator(ops.sm, rho) +
           p.kappa * quantum::apply_dissipator(ops.a, rho);
}

DensityMatrix em_step(const DensityMatrix& rho, double dt, double dW, const FullSystemParams& p) {
    if (!std::isfinite(dW)) throw Error("em_step: non-finite noise increment");
    require_shape(rho, p);
    const auto ops = system_operators(p);
    DensityMatrix next = rho + liouvillian_rhs(rho, p) * dt;
    if (p.eta > 0.0) next += std::sqrt(p.eta * p.kappa) * quantum::apply_measurement_superop(ops.a, rho) * dW;
    if (!next.allFinite()) throw Error("em_step: non-finite density matrix");
    symmetrize_and_normalize(next);
    return next;
}

SmeModel::SmeModel(const FullSystemParams& p) : params_(p), dim_(p.hilbert().dim()) {
    const auto ops = quantum::build_operators(p.hilbert());
    const auto sys = system_operators(p);
    const OperatorMatrix decay = p.gamma * ops.sm.adjoint() * ops.sm + p.kappa * ops.n;
    nonhermitian_ = OperatorTerms(Complex(0.0, -1.0) * sys.hamiltonian - 0.5 * decay);
    sqrt_gamma_sm_ = OperatorTerms(std::sqrt(p.gamma) * ops.sm);
    sqrt_kappa_a_ = OperatorTerms(std::sqrt(p.kappa) * ops.a);
    a_ = OperatorTerms(ops.a);
    a2_ = OperatorTerms(ops.a * ops.a);
    sz_diag_.resize(dim_);
    n_diag_.resize(dim_);
    for (int i = 0; i < dim_; ++i) {
        sz_diag_[i] = ops.sz(i, i).real();
        n_diag_[i] = ops.n(i, i).real();
    }
    noise_amp_ = std::sqrt(p.eta * p.kappa);
    for (auto* m : {&work_a_, &work_b_, &k1_, &k2_, &k3_, &k4_, &tmp_}) *m = DensityMatrix::Zero(dim_, dim_);
}

void SmeModel::drift(const DensityMatrix& rho, DensityMatrix& out) const {
    work_a_.setZero();
    nonhermitian_.add_left_product(rho, work_a_);
    out = work_a_ + work_a_.adjoint();
    sqrt_gamma_sm_.add_sandwich(rho, out);
    sqrt_kappa_a_.add_sandwich(rho, out);
}

void SmeModel::measurement(const DensityMatrix& rho, DensityMatrix& out) const {
    work_b_.setZero();
    a_.add_left_product(rho, work_b_);
    const double tr = 2.0 * work_b_.trace().real();
    out = work_b_ + work_b_.adjoint() - tr * rho;
}

double SmeModel::em_step(DensityMatrix& rho, double dW) const {
    drift(rho, k1_);
    tmp_ = rho + params_.dt * k1_;
    if (noise_amp_ > 0.0) {
        measurement(rho, k2_);
        tmp_ += (noise_amp_ * dW) * k2_;
    }
    const double drift_err = std::abs(tmp_.trace().real() - 1.0);
    rho = 0.5 * (tmp_ + tmp_.adjoint());
    rho /= rho.trace().real();
    return drift_err;
}

double SmeModel::rouchon_step(DensityMatrix& rho, double dy) const {
    const double h = params_.dt;
    const double c1 = noise_amp_ * dy;
    const double c2 = 0.5 * noise_amp_ * noise_amp_ * (dy * dy - h);
    // M = I + K h + c1 a + c2 a^2
    auto apply_m = [&](const DensityMatrix& in, DensityMatrix& out) {
        out = in;
        nonhermitian_.add_left_product(in, out, h);
        if (c1 != 0.0) a_.add_left_product(in, out, c1);
        if (c2 != 0.0) a2_.add_left_product(in, out, c2);
    };
    apply_m(rho, k1_);
    tmp_ = k1_.adjoint();
    apply_m(tmp_, k2_);
    sqrt_kappa_a_.add_sandwich(rho, k2_, (1.0 - params_.eta) * h);
    sqrt_gamma_sm_.add_sandwich(rho, k2_, h);
    const double tr = k2_.trace().real();
    rho = 0.5 * (k2_ + k2_.adjoint());
    rho /= tr;
    return std::abs(tr - 1.0);
}

void SmeModel::euler_step(DensityMatrix& rho) const {
    drift(rho, k1_);
    rho += params_.dt * k1_;
    symmetrize_and_normalize(rho);
}

void SmeModel::rk4_step(DensityMatrix& rho) const {
    const double h = params_.dt;
    drift(rho, k1_);
    tmp_ = rho + 0.5 * h * k1_;
    drift(tmp_, k2_);
    tmp_ = rho + 0.5 * h * k2_;
    drift(tmp_, k3_);
    tmp_ = rho + h * k3_;
    drift(tmp_, k4_);
    rho += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    symmetrize_and_normalize(rho);
}

double SmeModel::sigma_z(const DensityMatrix& rho) const {
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i) acc += sz_diag_[i] * rho(i, i).real();
    return acc;
}

double SmeModel::quadrature_x(const DensityMatrix& rho) const {
    double acc = 0.0;
    for (const auto& e : a_.entries()) acc += (e.value * rho(e.col, e.row)).real();
    return 2.0 * acc;
}

double SmeModel::photon_number(const DensityMatrix& rho) const {
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i) acc += n_diag_[i] * rho(i, i).real();
    return acc;
}

double SmeModel::top_fock_population(const DensityMatrix& rho) const {
    const int top = params_.n_max;
    return rho(top, top).real() + rho(2 * top + 1, 2 * top + 1).real();
}

namespace {

DensityMatrix initial_density(const FullSystemParams& p, const std::optional<DensityMatrix>& init) {
    if (init) {
        require_shape(*init, p);
        return *init;
    }
    return quantum::basis_state(p.hilbert(), 0, 0);
}

void finish_warnings(TrajectoryRecord& rec, const FullSystemParams& p) {
    if (rec.positivity_min < -1e-6) {
        rec.warnings.push_back("positivity violated: min eigenvalue " + io::format_number(rec.positivity_min));
    }
    if (rec.max_photon_number > 0.9 * p.n_max || rec.max_top_population > 1e-3) {
        rec.warnings.push_back("truncation leakage: <n> reached " + io::format_number(rec.max_photon_number) +
                               " and |n_max> population " + io::format_number(rec.max_top_population) +
                               " with n_max = " + std::to_string(p.n_max));
    }
}

}  // namespace

TrajectoryRecord simulate_conditional(const FullSystemParams& p, const SimulationOptions& opts) {
    TrajectoryRecord rec;
    rec.warnings = p.validate();
    rec.seed = p.seed;
    rec.stream = opts.stream;

    const SmeModel model(p);
    const NoiseStream noise(p.seed, opts.stream, p.dt);
    DensityMatrix rho = initial_density(p, opts.initial_state);

    const std::int64_t steps = p.steps();
    const std::size_t samples = static_cast<std::size_t>((steps + p.record_every - 1) / p.record_every);
    for (auto* v : {&rec.times, &rec.z, &rec.x, &rec.n, &rec.current}) v->reserve(samples);

    const Complex alpha0 = p.kappa > 0.0 ? steady_alpha(p.E, p.kappa) : Complex(0.0);
    const double g = p.chi * std::abs(alpha0);
    rec.positivity_min = quantum::min_eigenvalue(rho);

    double integrated_current = 0.0;
    for (std::int64_t k = 0; k < steps; ++k) {
        const double z = model.sigma_z(rho);
        const double x = model.quadrature_x(rho);
        const double nbar = model.photon_number(rho);
        rec.max_photon_number = std::max(rec.max_photon_number, nbar);
        rec.max_top_population = std::max(rec.max_top_population, model.top_fock_population(rho));
        const bool record = k % p.record_every == 0;
        if (record) {
            rec.times.push_back(static_cast<double>(k) * p.dt);
            rec.z.push_back(z);
            rec.x.push_back(x);
            rec.n.push_back(nbar);
            integrated_current = 0.0;
        }

        const double dW = noise.increment(static_cast<std::uint64_t>(k));
        double j_dt = 0.0;
        if (p.current == CurrentConvention::Standard) {
            j_dt = std::sqrt(p.eta * p.kappa) * x * p.dt + dW;
        } else {
            j_dt = g * std::sqrt(p.eta) * z * p.dt + std::sqrt(p.kappa) * dW;
        }
        integrated_current += j_dt;
        const bool block_end = (k + 1) % p.record_every == 0 || k + 1 == steps;
        if (block_end) {
            const std::int64_t block_start = (k / p.record_every) * p.record_every;
            rec.current.push_back(integrated_current / (static_cast<double>(k + 1 - block_start) * p.dt));
        }

        double drift_err = 0.0;
        if (p.integrator == Integrator::Rouchon) {
            drift_err = model.rouchon_step(rho, std::sqrt(p.eta * p.kappa) * x * p.dt + dW);
        } else {
            drift_err = model.em_step(rho, dW);
        }
        rec.max_trace_drift = std::max(rec.max_trace_drift, drift_err);
        if (!rho.allFinite()) throw Error("non-finite density matrix at step " + std::to_string(k));
        if ((k + 1) % p.positivity_check_every == 0) {
            rec.positivity_min = std::min(rec.positivity_min, quantum::min_eigenvalue(rho));
        }
    }
    finish_warnings(rec, p);
    return rec;
}

TrajectoryRecord simulate_unconditional(const FullSystemParams& p, DriftScheme scheme,
                                        const std::optional<DensityMatrix>& initial_state) {
    TrajectoryRecord rec;
    rec.warnings = p.validate();
    rec.seed = p.seed;
    const SmeModel model(p);
    DensityMatrix rho = initial_density(p, initial_state);
    rec.positivity_min = quantum::min_eigenvalue(rho);

    const std::int64_t steps = p.steps();
    for (std::int64_t k = 0; k < steps; ++k) {
        const double nbar = model.photon_number(rho);
        rec.max_photon_number = std::max(rec.max_photon_number, nbar);
        rec.max_top_population = std::max(rec.max_top_population, model.top_fock_population(rho));
        if (k % p.record_every == 0) {
            rec.times.push_back(static_cast<double>(k) * p.dt);
            rec.z.push_back(model.sigma_z(rho));
            rec.x.push_back(model.quadrature_x(rho));
            rec.n.push_back(nbar);
        }
        if (scheme == DriftScheme::RungeKutta4) {
            model.rk4_step(rho);
        } else {
            model.euler_step(rho);
        }
        if (!rho.allFinite()) throw Error("non-finite density matrix at step " + std::to_string(k));
        if ((k + 1) % p.positivity_check_every == 0) {
            rec.positivity_min = std::min(rec.positivity_min, quantum::min_eigenvalue(rho));
        }
    }
    finish_warnings(rec, p);
    return rec;
}

std::vector<TrajectoryRecord> simulate_ensemble(const FullSystemParams& p, int n_trajectories, int threads) {
    std::vector<TrajectoryRecord> out(static_cast<std::size_t>(std::max(0, n_trajectories)));
    io::parallel_for(out.size(), threads, [&](std::size_t i) {
        FullSystemParams pi = p;
        pi.seed = p.seed + i;
        SimulationOptions opts;
        opts.stream = i;
        try {
            out[i] = simulate_conditional(pi, opts);
        } catch (const Error& e) {
            throw Error("trajectory " + std::to_string(i) + ": " + e.what());
        }
    });
    return out;
}

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os) {
    os << "t,z,x,n,current\n";
    for (std::size_t i = 0; i < rec.size(); ++i) {
        os << io::format_number(rec.times[i]) << ',' << io::format_number(rec.z[i]) << ','
           << io::format_number(rec.x[i]) << ',' << io::format_number(rec.n[i]) << ',';
        if (i < rec.current.size()) os << io::format_number(rec.current[i]);
        os << '\n';
    }
}

}  // namespace stoq::sme
