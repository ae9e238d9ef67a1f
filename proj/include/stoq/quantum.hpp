#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stoq {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
using DensityMatrix = Eigen::MatrixXcd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stoq

namespace stoq::quantum {

// Truncated qubit (x) cavity space. Basis index is qubit-major:
// index = q * (n_max + 1) + n, with q = 0 the ground state |g> and q = 1 |e>.
struct HilbertConfig {
    int n_max = 10;

    int cavity_dim() const { return n_max + 1; }
    int dim() const { return 2 * (n_max + 1); }
    void validate() const;
};

struct OperatorSet {
    OperatorMatrix a;
    OperatorMatrix adag;
    OperatorMatrix n;
    OperatorMatrix sx;
    OperatorMatrix sy;
    OperatorMatrix sz;
    OperatorMatrix sm;
    OperatorMatrix identity;
};

// sz|g> = -|g>, sz|e> = +|e>, sm|e> = |g>.
OperatorSet build_operators(const HilbertConfig& cfg);

// Single-factor building blocks; composite operators are kron(qubit, cavity).
OperatorMatrix cavity_annihilation(int n_max);
OperatorMatrix pauli_x();
OperatorMatrix pauli_y();
OperatorMatrix pauli_z();
OperatorMatrix qubit_lowering();
OperatorMatrix kron(const OperatorMatrix& lhs, const OperatorMatrix& rhs);

// D[A]rho = A rho A^+ - (A^+A rho + rho A^+A) / 2
OperatorMatrix apply_dissipator(const OperatorMatrix& op, const DensityMatrix& rho);

// H[A]rho = A rho + rho A^+ - tr(A rho + rho A^+) rho
OperatorMatrix apply_measurement_superop(const OperatorMatrix& op, const DensityMatrix& rho);

OperatorMatrix commutator(const OperatorMatrix& lhs, const OperatorMatrix& rhs);

Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho);
double expectation_real(const OperatorMatrix& op, const DensityMatrix& rho);

struct DensityCheck {
    double hermiticity = 0.0;  // max |rho - rho^+|
    double trace_error = 0.0;  // |tr rho - 1|
    double min_eigenvalue = 0.0;

    bool valid() const {
        return hermiticity < 1e-10 && trace_error < 1e-9 && min_eigenvalue >= -1e-8;
    }
};

DensityCheck check_density(const DensityMatrix& rho);
double min_eigenvalue(const DensityMatrix& rho);
double max_antihermitian(const OperatorMatrix& m);

DensityMatrix pure_state(const Eigen::VectorXcd& psi);
// |q> (x) |n>, q = 0 ground, 1 excited
DensityMatrix basis_state(const HilbertConfig& cfg, int qubit, int photons);
// Displaced vacuum on the cavity factor, qubit in |q>. Coefficients are the
// truncated coherent-state amplitudes, renormalized.
DensityMatrix coherent_state(const HilbertConfig& cfg, int qubit, Complex alpha);

// Sparse view of a structured operator, used by the integrators' inner loops.
// Storage stays dense everywhere else.
class OperatorTerms {
public:
    struct Entry {
        int row;
        int col;
        Complex value;
    };

    OperatorTerms() = default;
    explicit OperatorTerms(const OperatorMatrix& op, double drop_below = 0.0);

    int dim() const { return dim_; }
    const std::vector<Entry>& entries() const { return entries_; }

    // out += A * m
    void add_left_product(const Eigen::MatrixXcd& m, Eigen::MatrixXcd& out, Complex scale = 1.0) const;
    // out += scale * A m A^+
    void add_sandwich(const Eigen::MatrixXcd& m, Eigen::MatrixXcd& out, double scale = 1.0) const;

private:
    int dim_ = 0;
    std::vector<Entry> entries_;
};

}  // namespace stoq::quantum
