#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stoq/quantum.hpp"

using namespace stoq;
using namespace stoq::quantum;

namespace {

// |q> (x) |n> basis vector built by hand from the qubit-major index rule
Eigen::VectorXcd ket(int n_max, int q, int n) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2 * (n_max + 1));
    v(q * (n_max + 1) + n) = 1.0;
    return v;
}

Eigen::MatrixXcd projector(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

Eigen::Matrix2cd qubit_density(double x, double y, double z) {
    const Complex i(0.0, 1.0);
    Eigen::Matrix2cd sx, sy, sz;
    // (g, e) ordering with sz = diag(-1, +1)
    sx << 0, 1, 1, 0;
    sy << 0, i, -i, 0;
    sz << -1, 0, 0, 1;
    return 0.5 * (Eigen::Matrix2cd::Identity() + x * sx + y * sy + z * sz);
}

}  // namespace

TEST_CASE("hilbert config validation") {
    CHECK_THROWS_AS(HilbertConfig{0}.validate(), Error);
    CHECK_NOTHROW(HilbertConfig{1}.validate());
    CHECK(HilbertConfig{5}.dim() == 12);
}

TEST_CASE("n_max=1 cavity annihilation has two unit entries in the composite space") {
    const auto ops = build_operators({1});
    CHECK(ops.a.rows() == 4);
    int unit = 0, nonzero = 0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            if (std::abs(ops.a(r, c)) > 0.0) ++nonzero;
            if (std::abs(ops.a(r, c) - 1.0) == 0.0) ++unit;
        }
    CHECK(unit == 2);
    CHECK(nonzero == 2);
    // <0|a|1> in each qubit block
    CHECK(ops.a(0, 1) == Complex(1.0));
    CHECK(ops.a(2, 3) == Complex(1.0));
}

TEST_CASE("ladder matrix elements follow sqrt(n)") {
    const int n_max = 6;
    const auto ops = build_operators({n_max});
    for (int q = 0; q < 2; ++q)
        for (int n = 1; n <= n_max; ++n) {
            const Complex amp = (ket(n_max, q, n - 1).adjoint() * ops.a * ket(n_max, q, n))(0, 0);
            CHECK(std::abs(amp - std::sqrt(static_cast<double>(n))) < 1e-15);
        }
}

TEST_CASE("qubit conventions") {
    const int n_max = 3;
    const auto ops = build_operators({n_max});
    const auto g = ket(n_max, 0, 0);
    const auto e = ket(n_max, 1, 0);
    CHECK(oracle::max_abs(ops.sz * g + g) == 0.0);
    CHECK(oracle::max_abs(ops.sz * e - e) == 0.0);
    CHECK(oracle::max_abs(ops.sm * e - g) == 0.0);
    const Eigen::MatrixXcd smsp = ops.sm * ops.sm.adjoint();
    CHECK(oracle::max_abs(smsp * g - g) == 0.0);
    CHECK(oracle::max_abs(smsp * e) == 0.0);
    // [sz, sm] = -2 sm exactly
    CHECK(oracle::max_abs(ops.sz * ops.sm - ops.sm * ops.sz + 2.0 * ops.sm) == 0.0);
}

TEST_CASE("[a, a+] is the identity except on the last Fock row") {
    const int n_max = 5;
    const auto ops = build_operators({n_max});
    const Eigen::MatrixXcd comm = ops.a * ops.adag - ops.adag * ops.a;
    for (int q = 0; q < 2; ++q)
        for (int n = 0; n <= n_max; ++n) {
            const int i = q * (n_max + 1) + n;
            if (n < n_max) {
                CHECK(std::abs(comm(i, i) - 1.0) < 1e-14);
            } else {
                CHECK(std::abs(comm(i, i) - 1.0) > 1.0);
            }
        }
}

TEST_CASE("dissipator examples") {
    const int n_max = 3;
    const auto ops = build_operators({n_max});
    SUBCASE("D[sm] on |e><e|") {
        const auto e = projector(ket(n_max, 1, 0));
        const auto g = projector(ket(n_max, 0, 0));
        CHECK(oracle::max_abs(apply_dissipator(ops.sm, e) - (g - e)) < 1e-15);
    }
    SUBCASE("D[a] on |1><1|") {
        const auto one = projector(ket(n_max, 0, 1));
        const auto zero = projector(ket(n_max, 0, 0));
        CHECK(oracle::max_abs(apply_dissipator(ops.a, one) - (zero - one)) < 1e-15);
    }
    SUBCASE("D[sz] halves nothing on the diagonal and maps coherences c to -2c") {
        Eigen::Matrix2cd rho;
        const Complex c(0.1, 0.2);
        rho << 0.3, c, std::conj(c), 0.7;
        const auto out = apply_dissipator(pauli_z(), rho);
        CHECK(std::abs(out(0, 0)) < 1e-15);
        CHECK(std::abs(out(1, 1)) < 1e-15);
        CHECK(std::abs(out(0, 1) + 2.0 * c) < 1e-15);
        CHECK(std::abs(out(1, 0) + 2.0 * std::conj(c)) < 1e-15);
    }
    CHECK_THROWS_AS(apply_dissipator(ops.a, Eigen::MatrixXcd::Identity(3, 3)), Error);
}

TEST_CASE("measurement superoperator examples") {
    const int n_max = 4;
    const auto ops = build_operators({n_max});
    CHECK(oracle::max_abs(apply_measurement_superop(ops.a, projector(ket(n_max, 0, 0)))) < 1e-15);
    CHECK(oracle::max_abs(apply_measurement_superop(ops.sz, projector(ket(n_max, 1, 2)))) < 1e-15);
    CHECK(oracle::max_abs(apply_measurement_superop(ops.sz, projector(ket(n_max, 0, 3)))) < 1e-15);
    CHECK_THROWS_AS(apply_measurement_superop(ops.a, Eigen::MatrixXcd::Identity(2, 2)), Error);
}

TEST_CASE("H[sz] on a Bloch state gives the full-noise Bloch coefficients") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto sx = pauli_x(), sy = pauli_y(), sz = pauli_z();
    for (int k = 0; k < 50; ++k) {
        double x = u(gen), y = u(gen), z = u(gen);
        const double r = std::sqrt(x * x + y * y + z * z);
        if (r > 1.0) x /= r, y /= r, z /= r;
        const Eigen::MatrixXcd rho = qubit_density(x, y, z);
        const auto h = apply_measurement_superop(sz, rho);
        CHECK(std::abs((sx * h).trace().real() - (-2.0 * x * z)) < 1e-12);
        CHECK(std::abs((sy * h).trace().real() - (-2.0 * y * z)) < 1e-12);
        CHECK(std::abs((sz * h).trace().real() - 2.0 * (1.0 - z * z)) < 1e-12);
    }
}

TEST_CASE("superoperators are Hermitian and traceless on random states") {
    std::mt19937_64 gen(5);
    for (int k = 0; k < 100; ++k) {
        const int n_max = 1 + k % 3;  // composite dim 4, 6, 8
        const auto ops = build_operators({n_max});
        const auto rho = oracle::random_density(2 * (n_max + 1), gen);
        for (const auto* op : {&ops.a, &ops.sm, &ops.sz, &ops.sx}) {
            const auto d = apply_dissipator(*op, rho);
            const auto h = apply_measurement_superop(*op, rho);
            CHECK(std::abs(d.trace()) < 1e-10);
            CHECK(std::abs(h.trace()) < 1e-10);
            CHECK(oracle::max_abs(d - d.adjoint()) < 1e-10);
            CHECK(oracle::max_abs(h - h.adjoint()) < 1e-10);
        }
    }
}

TEST_CASE("expectation examples") {
    const int n_max = 12;
    const auto ops = build_operators({n_max});
    CHECK(expectation_real(ops.sz, basis_state({n_max}, 0, 0)) == -1.0);
    for (int n = 0; n <= n_max; ++n) CHECK(std::abs(expectation_real(ops.n, basis_state({n_max}, 1, n)) - n) < 1e-14);
    const auto coh = coherent_state({n_max}, 0, Complex(1.0, 0.0));
    // <a + a+> = 2 Re(alpha) for a coherent state
    CHECK(std::abs(expectation_real(ops.a + ops.adag, coh) - 2.0) < 1e-6);
    CHECK(std::abs(expectation(ops.a + ops.adag, coh).imag()) < 1e-10);
    CHECK_THROWS_AS(expectation(ops.a, Eigen::MatrixXcd::Identity(2, 2)), Error);
}

TEST_CASE("density checks") {
    const auto rho = basis_state({3}, 0, 0);
    CHECK(check_density(rho).valid());
    Eigen::MatrixXcd bad = rho;
    bad(0, 0) = 1.5;
    bad(1, 1) = -0.5;
    const auto c = check_density(bad);
    CHECK(c.min_eigenvalue == doctest::Approx(-0.5));
    CHECK_FALSE(c.valid());
}

TEST_CASE("sparse operator terms match dense products") {
    std::mt19937_64 gen(3);
    const auto ops = build_operators({5});
    const auto rho = oracle::random_density(12, gen);
    for (const auto* op : {&ops.a, &ops.sm, &ops.sz}) {
        OperatorTerms t(*op);
        Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(12, 12);
        t.add_left_product(rho, left, Complex(0.5, -0.25));
        CHECK(oracle::max_abs(left - Complex(0.5, -0.25) * (*op) * rho) < 1e-14);
        Eigen::MatrixXcd sand = Eigen::MatrixXcd::Zero(12, 12);
        t.add_sandwich(rho, sand, 0.7);
        CHECK(oracle::max_abs(sand - 0.7 * (*op) * rho * op->adjoint()) < 1e-14);
    }
}
