#include "stoq/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace stoq::stats {

namespace {

constexpr double kHbar = 1.054571817e-34;  // J s

// log(erfc(x)) without underflow for large positive x
double log_erfc(double x) {
    if (x < 25.0) return std::log(std::erfc(x));
    const double x2 = x * x;
    return -x2 - std::log(x * std::sqrt(std::numbers::pi)) + std::log1p(-0.5 / x2 + 0.75 / (x2 * x2));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

WaldMoments wald_moments(double omega, double gamma_m) {
    if (!(omega > 0.0) || !(gamma_m > 0.0)) throw Error("wald_moments: Omega and Gamma must be > 0");
    WaldMoments w;
    w.params.m = std::numbers::pi / omega;
    w.params.lambda = std::numbers::pi / gamma_m;
    w.variance = std::numbers::pi * std::numbers::pi * gamma_m / (omega * omega * omega);
    w.snr = std::sqrt(omega / gamma_m);
    return w;
}

double wald_pdf(const WaldParams& w, double t) {
    if (!(t > 0.0)) return 0.0;
    const double d = t - w.m;
    return std::sqrt(w.lambda / (2.0 * std::numbers::pi * t * t * t)) *
           std::exp(-w.lambda * d * d / (2.0 * w.m * w.m * t));
}

double wald_cdf(const WaldParams& w, double t) {
    if (!(t > 0.0)) return 0.0;
    if (std::isinf(w.lambda)) return t >= w.m ? 1.0 : 0.0;
    const double s = std::sqrt(w.lambda / t);
    const double first = normal_cdf(s * (t / w.m - 1.0));
    // exp(2 lambda/m) Phi(-z) evaluated in log space
    const double z = s * (t / w.m + 1.0);
    const double log_second = 2.0 * w.lambda / w.m + std::log(0.5) + log_erfc(z / std::numbers::sqrt2);
    return std::clamp(first + std::exp(log_second), 0.0, 1.0);
}

double wald_sample(const WaldParams& w, double normal, double uniform) {
    const double y = normal * normal;
    const double m = w.m;
    const double x = m + m * m * y / (2.0 * w.lambda) -
                     m / (2.0 * w.lambda) * std::sqrt(4.0 * m * w.lambda * y + m * m * y * y);
    return uniform <= m / (m + x) ? x : m * m / x;
}

double kolmogorov_pvalue(double d, std::size_t n) {
    if (n == 0) return 1.0;
    const double sn = std::sqrt(static_cast<double>(n));
    const double x = (sn + 0.12 + 0.11 / sn) * d;
    if (x < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

WaldFit invgauss_fit(std::span<const double> periods) {
    if (periods.size() < 10) {
        throw Error("invgauss_fit: need at least 10 samples, got " + std::to_string(periods.size()));
    }
    for (double t : periods) {
        if (!(t > 0.0) || !std::isfinite(t)) throw Error("invgauss_fit: samples must be positive and finite");
    }
    WaldFit fit;
    fit.n = periods.size();
    const double n = static_cast<double>(periods.size());
    const double m = std::accumulate(periods.begin(), periods.end(), 0.0) / n;
    double inv = 0.0;
    for (double t : periods) inv += 1.0 / t - 1.0 / m;
    inv /= n;
    fit.params.m = m;
    // inv * m is about the squared coefficient of variation; below 1e-12 the
    // spread is at the level of timing round-off and lambda is reported as inf
    if (inv <= 1e-12 / m) {
        fit.degenerate = true;
        fit.params.lambda = std::numeric_limits<double>::infinity();
    } else {
        fit.params.lambda = 1.0 / inv;
    }
    std::vector<double> v(periods.begin(), periods.end());
    fit.ks = ks_statistic(v, [&](double t) { return wald_cdf(fit.params, t); });
    fit.ks_pvalue = kolmogorov_pvalue(fit.ks, fit.n);
    return fit;
}

double JumpPeriodStats::pdf(double t) const {
    if (!(t >= 0.0)) return 0.0;
    if (std::abs(nu - mu) < 1e-9 * (nu + mu)) return mu * mu * t * std::exp(-mu * t);
    // mu nu / (nu - mu) (e^{-mu t} - e^{-nu t}) written with expm1
    return -mu * nu / (nu - mu) * std::exp(-mu * t) * std::expm1(-(nu - mu) * t);
}

double JumpPeriodStats::cdf(double t) const {
    if (!(t > 0.0)) return 0.0;
    if (std::abs(nu - mu) < 1e-9 * (nu + mu)) return -std::expm1(-mu * t) - mu * t * std::exp(-mu * t);
    return 1.0 - (nu * std::exp(-mu * t) - mu * std::exp(-nu * t)) / (nu - mu);
}

JumpPeriodStats jump_period_dist(const adiabatic::JumpRates& rates) {
    if (!(rates.mu > 0.0) || !(rates.nu > 0.0)) throw Error("jump_period_dist: rates must be > 0");
    JumpPeriodStats s;
    s.mu = rates.mu;
    s.nu = rates.nu;
    s.mean = (s.mu + s.nu) / (s.mu * s.nu);
    s.variance = (s.nu * s.nu + s.mu * s.mu) / (s.mu * s.mu * s.nu * s.nu);
    return s;
}

double PoissonCounts::log_pmf(std::int64_t n) const {
    if (n < 0) return -std::numeric_limits<double>::infinity();
    if (mean == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double k = static_cast<double>(n);
    return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

double PoissonCounts::pmf(std::int64_t n) const { return std::exp(log_pmf(n)); }

PoissonCounts poisson_counts(double mu, double t) {
    if (!(mu >= 0.0)) throw Error("poisson_counts: mu must be >= 0");
    if (!(t > 0.0)) throw Error("poisson_counts: t must be > 0");
    PoissonCounts p;
    p.mean = mu * t;
    p.relative_error = p.mean > 0.0 ? 1.0 / std::sqrt(p.mean) : std::numeric_limits<double>::infinity();
    return p;
}

double dissipation_rate(const DissipationParams& p, double z) {
    if (!(std::abs(z) <= 1.0)) throw Error("dissipation_rate: |Z| must be <= 1");
    if (!(p.kappa >= 0.0 && p.n0 >= 0.0 && p.gamma >= 0.0 && p.cavity_photon_energy >= 0.0 &&
          p.qubit_energy >= 0.0)) {
        throw Error("dissipation_rate: parameters must be >= 0");
    }
    return p.kappa * p.cavity_photon_energy * p.n0 + p.gamma * p.qubit_energy * (1.0 + z);
}

DistanceReport statistical_distance_rate(const DensityMatrix& rho, const OperatorMatrix& drho_dt) {
    if (rho.rows() != rho.cols() || drho_dt.rows() != rho.rows() || drho_dt.cols() != rho.cols()) {
        throw Error("statistical_distance_rate: shape mismatch");
    }
    DistanceReport rep;
    const DensityMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
    const Eigen::VectorXd p = eig.eigenvalues();
    const Eigen::MatrixXcd& v = eig.eigenvectors();
    const Eigen::MatrixXcd a = v.adjoint() * drho_dt * v;
    const Eigen::Index d = rho.rows();
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = 0; k < d; ++k) {
            const double s = p(j) + p(k);
            if (s < 1e-12) {
                if (std::abs(a(j, k)) > 1e-10) rep.diverged = true;
                continue;
            }
            rep.rate2 += 2.0 / s * std::norm(a(j, k));
        }
    }
    rep.linear_entropy = (herm * herm).trace().real();

    if (d == 2) {
        rep.has_bloch = true;
        const Complex sl_dot = 2.0 * (herm * drho_dt).trace();
        const double dx = quantum::expectation_real(quantum::pauli_x(), drho_dt);
        const double dy = quantum::expectation_real(quantum::pauli_y(), drho_dt);
        const double dz = quantum::expectation_real(quantum::pauli_z(), drho_dt);
        rep.dx2 = dx * dx;
        rep.dy2 = dy * dy;
        rep.dz2 = dz * dz;
        const double gap = 1.0 - rep.linear_entropy;
        const double sl = sl_dot.real();
        if (gap < 1e-12) {
            if (std::abs(sl) > 1e-10) {
                rep.entropy_term = std::numeric_limits<double>::infinity();
                rep.diverged = true;
            }
        } else {
            rep.entropy_term = sl * sl / (2.0 * gap);
        }
        rep.bloch_rate2 = rep.entropy_term + rep.dx2 + rep.dy2 + rep.dz2;
    }
    return rep;
}

double rate2_to_si(double rate2_natural) { return rate2_natural / (kHbar * kHbar); }

StarkCalibration stark_calibration(double chi, double kappa) {
    if (!(chi > 0.0) || !(kappa > 0.0)) throw Error("stark_calibration: chi and kappa must be > 0");
    StarkCalibration c;
    c.stark_slope = 2.0 * chi;
    c.dephasing_slope = 8.0 * chi * chi / kappa;
    c.ratio = c.stark_slope / c.dephasing_slope;
    return c;
}

}  // namespace stoq::stats
