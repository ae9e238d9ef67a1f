#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stoq/adiabatic.hpp"
#include "stoq/quantum.hpp"

namespace stoq::stats {

struct WaldParams {
    double m = 0.0;       // mean period, us
    double lambda = 0.0;  // shape, us
};

struct WaldMoments {
    WaldParams params;
    double variance = 0.0;
    double snr = 0.0;
};

// Closed-form period law of the linearized phase diffusion:
// m = pi/Omega, lambda = pi/Gamma, V = pi^2 Gamma / Omega^3, SNR = sqrt(Omega/Gamma).
WaldMoments wald_moments(double omega, double gamma_m);

double wald_pdf(const WaldParams& w, double t);
double wald_cdf(const WaldParams& w, double t);
// Michael-Schucany-Haas transformation sampler.
double wald_sample(const WaldParams& w, double normal, double uniform);

struct WaldFit {
    WaldParams params;
    std::size_t n = 0;
    bool degenerate = false;  // coefficient of variation below 1e-6: lambda = inf
    double ks = 0.0;          // Kolmogorov-Smirnov distance to the fitted law
    double ks_pvalue = 1.0;
};

// Closed-form maximum likelihood: m = mean(T), 1/lambda = mean(1/T - 1/m).
WaldFit invgauss_fit(std::span<const double> periods);

struct JumpPeriodStats {
    double mu = 0.0;
    double nu = 0.0;
    double mean = 0.0;
    double variance = 0.0;

    // Density of the time for two transitions (up then down, or vice versa).
    double pdf(double t) const;
    double cdf(double t) const;
};

JumpPeriodStats jump_period_dist(const adiabatic::JumpRates& rates);

struct PoissonCounts {
    double mean = 0.0;  // mu t
    double relative_error = 0.0;

    double pmf(std::int64_t n) const;
    double log_pmf(std::int64_t n) const;
};

PoissonCounts poisson_counts(double mu, double t);

struct DissipationParams {
    double kappa = 0.0;
    double n0 = 0.0;
    double gamma = 0.0;
    double cavity_photon_energy = 1.0;  // E_c
    double qubit_energy = 1.0;          // E_q
};

// kappa E_c n0 + gamma E_q (1 + Z)
double dissipation_rate(const DissipationParams& p, double z);

struct DistanceReport {
    double rate2 = 0.0;
    double linear_entropy = 0.0;  // S_L = tr rho^2
    bool diverged = false;
    // Bloch decomposition, filled for 2x2 inputs
    bool has_bloch = false;
    double entropy_term = 0.0;  // (dS_L/dt)^2 / (2 (1 - S_L))
    double dx2 = 0.0;
    double dy2 = 0.0;
    double dz2 = 0.0;
    double bloch_rate2 = 0.0;
};

// (dS/dt)^2 = tr[L_rho(drho/dt) drho/dt] through the eigenbasis of rho,
// skipping eigenvalue pairs with p_j + p_k < 1e-12.
DistanceReport statistical_distance_rate(const DensityMatrix& rho, const OperatorMatrix& drho_dt);

// Divides by hbar^2: converts a rate2 computed with energies in joules to s^-2.
double rate2_to_si(double rate2_natural);

struct StarkCalibration {
    double stark_slope = 0.0;      // d Delta_ac / d n = 2 chi
    double dephasing_slope = 0.0;  // d Gamma_phi / d n = 8 chi^2 / kappa
    double ratio = 0.0;            // kappa / (4 chi)

    // reported comparison constant for the measured ratio, not a model output
    static constexpr double measured_ratio_factor = 0.775;
};

StarkCalibration stark_calibration(double chi, double kappa);

// Kolmogorov distribution tail: P(sqrt(n) D > x) asymptotically.
double kolmogorov_pvalue(double d, std::size_t n);

template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double normal_cdf(double x);

}  // namespace stoq::stats
