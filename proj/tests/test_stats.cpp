#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "stoq/adiabatic.hpp"
#include "stoq/stats.hpp"

using namespace stoq;
using namespace stoq::stats;

namespace {

constexpr double pi = std::numbers::pi;

// Michael-Schucany-Haas, written out independently of the library sampler
std::vector<double> wald_draws(double m, double lambda, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::vector<double> out(n);
    for (auto& t : out) {
        const double z = nd(gen);
        const double y = z * z;
        const double x = m + m * m * y / (2.0 * lambda) -
                         m / (2.0 * lambda) * std::sqrt(4.0 * m * lambda * y + m * m * y * y);
        t = ud(gen) <= m / (m + x) ? x : m * m / x;
    }
    return out;
}

Eigen::MatrixXcd random_unitary(int d, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = {nd(gen), nd(gen)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    return qr.householderQ();
}

// exp(-i H t) for Hermitian H by eigendecomposition
Eigen::MatrixXcd evolve(const Eigen::MatrixXcd& h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phases(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) phases(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST_CASE("wald_moments") {
    auto w = wald_moments(pi, pi);
    CHECK(w.params.m == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.params.lambda == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.variance == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(w.snr == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(wald_moments(4.0, 1.0).snr == doctest::Approx(2.0).epsilon(1e-15));
    const auto sharp = wald_moments(2.0, 1e-12);
    CHECK(sharp.variance < 1e-11);
    CHECK(sharp.snr > 1e5);
    for (double omega : {0.3, 1.0, 7.0})
        for (double g : {0.01, 0.5, 3.0}) {
            const auto x = wald_moments(omega, g);
            CHECK(x.params.lambda == doctest::Approx(std::pow(x.params.m, 3) / x.variance).epsilon(1e-14));
        }
    CHECK_THROWS_AS(wald_moments(0.0, 1.0), Error);
    CHECK_THROWS_AS(wald_moments(1.0, 0.0), Error);
}

TEST_CASE("wald pdf and cdf agree with each other and the oracle") {
    const WaldParams w{1.3, 4.0};
    double integral = 0.0;
    const double h = 1e-4;
    for (double t = h / 2; t < 3.0; t += h) integral += wald_pdf(w, t) * h;
    CHECK(integral == doctest::Approx(wald_cdf(w, 3.0)).epsilon(1e-6));
    for (double t : {0.2, 1.0, 2.5}) CHECK(wald_cdf(w, t) == doctest::Approx(oracle::wald_cdf(1.3, 4.0, t)).epsilon(1e-12));
    CHECK(wald_cdf(w, 0.0) == 0.0);
}

TEST_CASE("invgauss_fit") {
    SUBCASE("recovers synthetic parameters") {
        const auto t = wald_draws(1.0, 10.0, 10000, 1);
        const auto fit = invgauss_fit(t);
        CHECK(fit.params.m == doctest::Approx(1.0).epsilon(0.05));
        CHECK(fit.params.lambda == doctest::Approx(10.0).epsilon(0.05));
        CHECK(fit.n == 10000);
        CHECK_FALSE(fit.degenerate);
        CHECK(fit.ks < oracle::ks_critical_01(t.size()));
        CHECK(fit.ks_pvalue > 0.01);
    }
    SUBCASE("identical samples are degenerate") {
        const std::vector<double> t(20, 2.5);
        const auto fit = invgauss_fit(t);
        CHECK(fit.params.m == 2.5);
        CHECK(fit.degenerate);
        CHECK(std::isinf(fit.params.lambda));
    }
    SUBCASE("time rescaling") {
        const auto t = wald_draws(2.0, 3.0, 500, 2);
        const auto a = invgauss_fit(t);
        for (double c : {0.25, 3.0, 1e3}) {
            std::vector<double> s(t);
            for (double& x : s) x *= c;
            const auto b = invgauss_fit(s);
            CHECK(b.params.m == doctest::Approx(c * a.params.m).epsilon(1e-12));
            CHECK(b.params.lambda == doctest::Approx(c * a.params.lambda).epsilon(1e-12));
        }
    }
    SUBCASE("first-passage periods") {
        const auto t = adiabatic::sample_first_passage(pi, pi, 1e-4, 4000, 3);
        const auto fit = invgauss_fit(t);
        CHECK(std::abs(fit.params.m - 1.0) < 3.0 * oracle::standard_error_of_mean(t));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(invgauss_fit(std::vector<double>(9, 1.0)), Error);
        std::vector<double> t(12, 1.0);
        t[3] = 0.0;
        CHECK_THROWS_AS(invgauss_fit(t), Error);
    }
}

TEST_CASE("library Wald sampler matches the law") {
    const WaldParams w{0.8, 2.0};
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::vector<double> t(5000);
    for (double& x : t) x = wald_sample(w, nd(gen), ud(gen));
    CHECK(oracle::ks_distance(t, [&](double x) { return oracle::wald_cdf(0.8, 2.0, x); }) <
          oracle::ks_critical_01(t.size()));
}

TEST_CASE("jump_period_dist") {
    SUBCASE("symmetric rates") {
        const auto d = jump_period_dist({1.0, 1.0});
        CHECK(d.pdf(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
        CHECK(d.mean == doctest::Approx(2.0));
        CHECK(d.variance == doctest::Approx(2.0));
    }
    SUBCASE("closed-form moments") {
        const double mu = 0.4, nu = 1.7;
        const auto d = jump_period_dist({mu, nu});
        CHECK(d.mean == doctest::Approx((mu + nu) / (mu * nu)));
        CHECK(d.variance == doctest::Approx((nu * nu + mu * mu) / (mu * mu * nu * nu)));
        CHECK(d.pdf(0.9) == doctest::Approx(mu * nu / (nu - mu) * (std::exp(-mu * 0.9) - std::exp(-nu * 0.9))));
    }
    SUBCASE("normalization") {
        for (auto r : {adiabatic::JumpRates{1.0, 1.0}, {0.3, 2.0}, {5.0, 0.7}}) {
            const auto d = jump_period_dist(r);
            const double upper = 50.0 / std::min(r.mu, r.nu);
            // composite Simpson
            const int n = 200000;
            const double h = upper / n;
            double s = d.pdf(0.0) + d.pdf(upper);
            for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * d.pdf(i * h);
            CHECK(std::abs(s * h / 3.0 - 1.0) < 1e-6);
            CHECK(d.cdf(upper) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("continuity across the equal-rate switch") {
        const double mu = 1.3;
        const auto near = jump_period_dist({mu, mu * (1.0 + 1e-8)});
        for (double t : {0.1, 1.0, 4.0}) {
            CHECK(std::abs(near.pdf(t) - mu * mu * t * std::exp(-mu * t)) < 1e-6);
        }
    }
    SUBCASE("fast up-jumps") {
        CHECK(jump_period_dist({1e8, 0.5}).mean == doctest::Approx(2.0).epsilon(1e-6));
    }
    CHECK_THROWS_AS(jump_period_dist({0.0, 1.0}), Error);
}

TEST_CASE("telegraph periods follow the jump-period law") {
    const adiabatic::JumpRates r{1.0, 1.0};
    const auto tel = adiabatic::simulate_telegraph(r, 2e4, 13);
    const auto p = tel.periods();
    REQUIRE(p.size() > 5000);
    const auto d = jump_period_dist(r);
    CHECK(std::abs(oracle::mean(p) - d.mean) < 3.0 * oracle::standard_error_of_mean(p));
    CHECK(std::abs(oracle::variance(p) - d.variance) < 3.0 * oracle::standard_error_of_variance(p));
    CHECK(oracle::ks_distance(p, [&](double t) { return d.cdf(t); }) < oracle::ks_critical_01(p.size()));
}

TEST_CASE("poisson_counts") {
    CHECK(poisson_counts(10.0, 10.0).relative_error == doctest::Approx(0.1));
    const auto z = poisson_counts(0.0, 5.0);
    CHECK(z.pmf(0) == 1.0);
    CHECK(z.pmf(3) == 0.0);
    const auto big = poisson_counts(1e4, 100.0);  // mu t = 1e6: the direct form overflows
    CHECK(std::isfinite(big.pmf(1000000)));
    CHECK(big.pmf(1000000) == doctest::Approx(1.0 / std::sqrt(2.0 * pi * 1e6)).epsilon(1e-3));
    const auto p = poisson_counts(0.5, 4.0);
    double total = 0.0;
    for (int n = 0; n < 60; ++n) total += p.pmf(n);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.pmf(3) == doctest::Approx(std::pow(2.0, 3) * std::exp(-2.0) / 6.0).epsilon(1e-12));
    CHECK_THROWS_AS(poisson_counts(-1.0, 1.0), Error);
    CHECK_THROWS_AS(poisson_counts(1.0, 0.0), Error);
}

TEST_CASE("up-jump counts are Poisson when the return is fast") {
    // nu >> mu: up-jumps approach a Poisson process of rate mu nu / (mu + nu)
    const adiabatic::JumpRates r{1.0, 100.0};
    const double window = 10.0, T = 2e4;
    const auto tel = adiabatic::simulate_telegraph(r, T, 17);
    std::vector<double> counts(static_cast<std::size_t>(T / window), 0.0);
    for (std::size_t k = 0; k < tel.jump_times.size(); ++k) {
        if (tel.states[k] != 1) continue;
        const auto b = static_cast<std::size_t>(tel.jump_times[k] / window);
        if (b < counts.size()) counts[b] += 1.0;
    }
    const double fano = oracle::variance(counts) / oracle::mean(counts);
    // SE of a sample variance ratio for Poisson data ~ sqrt(2 / (N - 1))
    const double se = std::sqrt(2.0 / static_cast<double>(counts.size() - 1));
    CHECK(std::abs(fano - 1.0) < 3.0 * se);
    const auto pc = poisson_counts(r.mu * r.nu / (r.mu + r.nu), window);
    CHECK(std::abs(oracle::mean(counts) - pc.mean) < 3.0 * pc.relative_error * pc.mean / std::sqrt(counts.size()));
}

TEST_CASE("dissipation_rate") {
    CHECK(dissipation_rate({1.0, 0.0, 0.2}, -1.0) == 0.0);
    CHECK(dissipation_rate({1.0, 10.0, 0.0}, 0.3) == doctest::Approx(10.0));
    CHECK(dissipation_rate({2.0, 1.5, 0.5, 3.0, 2.0}, 0.5) == doctest::Approx(2.0 * 3.0 * 1.5 + 0.5 * 2.0 * 1.5));
    CHECK_THROWS_AS(dissipation_rate({1.0, 1.0, 1.0}, 1.1), Error);
    double prev = -1.0;
    for (double n0 : {0.0, 0.5, 1.0, 4.0}) {
        const double d = dissipation_rate({1.0, n0, 0.2}, 0.0);
        CHECK(d >= 0.0);
        CHECK(d >= prev);
        prev = d;
    }
    prev = -1.0;
    for (double z : {-1.0, -0.2, 0.4, 1.0}) {
        const double d = dissipation_rate({1.0, 2.0, 0.2}, z);
        CHECK(d >= prev);
        prev = d;
    }
}

TEST_CASE("lambda falls as dissipation rises across an n0 sweep") {
    const double omega = 2.0, chi = 0.2, kappa = 1.0;
    double prev_lambda = std::numeric_limits<double>::infinity(), prev_diss = -1.0;
    for (double n0 : {0.1, 0.3, 1.0, 3.0, 10.0}) {
        const auto a = adiabatic::from_photon_number(omega, chi, kappa, n0, 0.0);
        const double lambda = wald_moments(omega, a.gamma_m).params.lambda;
        const double diss = dissipation_rate({kappa, n0, 0.0}, -1.0);
        CHECK(lambda < prev_lambda);
        CHECK(diss > prev_diss);
        prev_lambda = lambda;
        prev_diss = diss;
    }
}

TEST_CASE("statistical_distance_rate") {
    std::mt19937_64 gen(21);
    SUBCASE("stationary state") {
        const auto rho = oracle::random_density(3, gen);
        const auto r = statistical_distance_rate(rho, Eigen::MatrixXcd::Zero(3, 3));
        CHECK(r.rate2 == 0.0);
        CHECK_FALSE(r.diverged);
    }
    SUBCASE("pure qubit under Omega sigma_x against the fidelity distance") {
        const double omega = 0.9;
        Eigen::MatrixXcd h(2, 2);
        h << 0, omega, omega, 0;
        Eigen::VectorXcd g(2);
        g << 1, 0;
        const Eigen::MatrixXcd rho = g * g.adjoint();
        const Eigen::MatrixXcd drho = Complex(0, -1) * (h * rho - rho * h);
        const auto r = statistical_distance_rate(rho, drho);
        // Bures angle between psi(0) and psi(delta), squared per unit time, times 4
        const double delta = 1e-3;
        const Eigen::VectorXcd later = evolve(h, delta) * g;
        const double angle = std::acos(std::min(1.0, std::abs(g.dot(later))));
        const double oracle_rate2 = 4.0 * angle * angle / (delta * delta);
        CHECK(std::abs(r.rate2 - oracle_rate2) < 1e-8);
        CHECK(std::abs(r.rate2 - 4.0 * omega * omega) < 1e-8);
        CHECK(r.linear_entropy == doctest::Approx(1.0));
        CHECK_FALSE(r.diverged);
    }
    SUBCASE("purity loss from a pure state diverges") {
        Eigen::MatrixXcd rho(2, 2), drho(2, 2);
        rho << 1, 0, 0, 0;
        drho << -0.1, 0, 0, 0.1;
        const auto r = statistical_distance_rate(rho, drho);
        CHECK(r.diverged);
    }
    SUBCASE("Bloch form equals the eigenbasis form") {
        for (int k = 0; k < 100; ++k) {
            const auto rho = oracle::random_density(2, gen);
            const auto drho = oracle::random_hermitian_traceless(2, gen);
            const auto r = statistical_distance_rate(rho, drho);
            REQUIRE(r.has_bloch);
            CHECK(std::abs(r.bloch_rate2 - r.rate2) < 1e-8);
            CHECK(r.rate2 >= 0.0);
            CHECK(r.linear_entropy >= 0.5 - 1e-12);
            CHECK(r.linear_entropy <= 1.0 + 1e-12);
        }
    }
    SUBCASE("unitary invariance") {
        for (int d : {2, 3, 5}) {
            const auto rho = oracle::random_density(d, gen);
            const auto drho = oracle::random_hermitian_traceless(d, gen);
            const auto u = random_unitary(d, gen);
            const auto a = statistical_distance_rate(rho, drho);
            const auto b = statistical_distance_rate(u * rho * u.adjoint(), u * drho * u.adjoint());
            CHECK(std::abs(a.rate2 - b.rate2) < 1e-8);
        }
    }
    SUBCASE("SLD oracle for a mixed state") {
        // tr[L drho] with L solving drho = (rho L + L rho) / 2 by vectorization
        const int d = 3;
        const auto rho = oracle::random_density(d, gen);
        const auto drho = oracle::random_hermitian_traceless(d, gen);
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
        Eigen::MatrixXcd sys = Eigen::MatrixXcd::Zero(d * d, d * d);
        // vec(rho L) = (I kron rho) vec(L), vec(L rho) = (rho^T kron I) vec(L)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                sys.block(i * d, j * d, d, d) += 0.5 * (i == j ? rho : Eigen::MatrixXcd::Zero(d, d));
                sys.block(i * d, j * d, d, d) += 0.5 * rho(j, i) * id;
            }
        const Eigen::VectorXcd l = sys.fullPivLu().solve(Eigen::Map<const Eigen::VectorXcd>(drho.data(), d * d));
        const Eigen::Map<const Eigen::MatrixXcd> lm(l.data(), d, d);
        const double expected = (lm * drho).trace().real();
        CHECK(statistical_distance_rate(rho, drho).rate2 == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("stark_calibration") {
    const auto s = stark_calibration(1.0, 8.0);
    CHECK(s.ratio == doctest::Approx(2.0));
    CHECK(s.stark_slope == doctest::Approx(2.0));
    CHECK(s.dephasing_slope == doctest::Approx(1.0));
    CHECK(s.stark_slope / s.dephasing_slope == doctest::Approx(s.ratio));
    CHECK(StarkCalibration::measured_ratio_factor == 0.775);
    CHECK_THROWS_AS(stark_calibration(0.0, 1.0), Error);
    CHECK_THROWS_AS(stark_calibration(1.0, -1.0), Error);
}

TEST_CASE("kolmogorov p-value") {
    CHECK(kolmogorov_pvalue(oracle::ks_critical_01(1000), 1000) == doctest::Approx(0.01).epsilon(0.02));
    CHECK(kolmogorov_pvalue(0.5, 1000) < 1e-10);
    CHECK(kolmogorov_pvalue(1e-4, 1000) > 0.999);
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
}
