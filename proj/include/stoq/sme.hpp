#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "stoq/quantum.hpp"

namespace stoq::sme {

enum class CurrentConvention {
    // J dt = sqrt(eta kappa) <a + a^+>_c dt + dW
    Standard,
    // J dt = g sqrt(eta) <sz>_c dt + sqrt(kappa) dW, g = chi |alpha0|
    PaperA5,
};

enum class DriftScheme { Euler, RungeKutta4 };

enum class Integrator {
    // Euler-Maruyama on the SME, then symmetrize and renormalize
    EulerMaruyama,
    // Kraus-form first-order map rho -> M rho M^+ + ..., positive by construction
    Rouchon,
};

std::string to_string(CurrentConvention c);
CurrentConvention current_convention_from_string(const std::string& s);
std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& s);

// Rates are angular frequencies in rad/us, times in us.
struct FullSystemParams {
    double E = 2.0 * std::numbers::pi * 0.25;
    double omega = 1.0;
    double chi = 2.0;
    double gamma = 0.2;
    double kappa = 1.0;
    double eta = 0.2;
    int n_max = 12;
    double dt = 1e-3;
    double duration = 200.0;
    std::uint64_t seed = 0;
    CurrentConvention current = CurrentConvention::Standard;
    Integrator integrator = Integrator::Rouchon;
    int record_every = 1;
    int positivity_check_every = 100;

    quantum::HilbertConfig hilbert() const { return {n_max}; }
    std::int64_t steps() const;
    // Throws on hard violations; returns soft warnings (step-size heuristic).
    std::vector<std::string> validate() const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> z;
    std::vector<double> x;
    std::vector<double> n;
    std::vector<double> current;
    double positivity_min = 0.0;
    double max_trace_drift = 0.0;
    double max_photon_number = 0.0;
    // largest population of the |n_max> Fock level seen
    double max_top_population = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::vector<std::string> warnings;

    std::size_t size() const { return times.size(); }
};

Complex steady_alpha(double E, double kappa);

// Dense reference route, built directly from the quantum-core superoperators.
OperatorMatrix liouvillian_rhs(const DensityMatrix& rho, const FullSystemParams& p);
DensityMatrix em_step(const DensityMatrix& rho, double dt, double dW, const FullSystemParams& p);

// Precomputed operators for repeated stepping. Produces the same drift and
// noise terms as the dense route, using only the nonzero operator entries.
class SmeModel {
public:
    explicit SmeModel(const FullSystemParams& p);

    const FullSystemParams& params() const { return params_; }
    int dim() const { return dim_; }

    void drift(const DensityMatrix& rho, DensityMatrix& out) const;
    // H[a] rho
    void measurement(const DensityMatrix& rho, DensityMatrix& out) const;

    // Returns |tr - 1| before renormalization.
    double em_step(DensityMatrix& rho, double dW) const;
    // dy = dW + sqrt(eta kappa) <a + a^+> dt. Returns |tr - 1| of the unnormalized map.
    double rouchon_step(DensityMatrix& rho, double dy) const;
    void rk4_step(DensityMatrix& rho) const;
    void euler_step(DensityMatrix& rho) const;

    double sigma_z(const DensityMatrix& rho) const;
    double quadrature_x(const DensityMatrix& rho) const;
    double photon_number(const DensityMatrix& rho) const;
    double top_fock_population(const DensityMatrix& rho) const;

private:
    FullSystemParams params_;
    int dim_;
    quantum::OperatorTerms nonhermitian_;  // -iH - (gamma sp sm + kappa ad a) / 2
    quantum::OperatorTerms sqrt_gamma_sm_;
    quantum::OperatorTerms sqrt_kappa_a_;
    quantum::OperatorTerms a_;
    quantum::OperatorTerms a2_;
    std::vector<double> sz_diag_;
    std::vector<double> n_diag_;
    double noise_amp_;
    mutable DensityMatrix work_a_, work_b_, k1_, k2_, k3_, k4_, tmp_;
};

struct SimulationOptions {
    std::uint64_t stream = 0;
    std::optional<DensityMatrix> initial_state;
};

TrajectoryRecord simulate_conditional(const FullSystemParams& p, const SimulationOptions& opts = {});
TrajectoryRecord simulate_unconditional(const FullSystemParams& p, DriftScheme scheme = DriftScheme::RungeKutta4,
                                        const std::optional<DensityMatrix>& initial_state = std::nullopt);

// Trajectory i uses seed p.seed + i and stream i. Results are ordered by index
// and independent of the thread count.
std::vector<TrajectoryRecord> simulate_ensemble(const FullSystemParams& p, int n_trajectories, int threads = 1);

void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& os);

}  // namespace stoq::sme
