#include "stoq/quantum.hpp"

#include <algorithm>
#include <cmath>

namespace stoq::quantum {

namespace {

void require_same_shape(const OperatorMatrix& op, const DensityMatrix& rho, const char* what) {
    if (op.rows() != op.cols() || rho.rows() != rho.cols() || op.rows() != rho.rows()) {
        throw Error(std::string(what) + ": shape mismatch (" + std::to_string(op.rows()) + "x" +
                    std::to_string(op.cols()) + " vs " + std::to_string(rho.rows()) + "x" +
                    std::to_string(rho.cols()) + ")");
    }
}

}  // namespace

void HilbertConfig::validate() const {
    if (n_max < 1) throw Error("n_max must be >= 1, got " + std::to_string(n_max));
}

OperatorMatrix cavity_annihilation(int n_max) {
    OperatorMatrix a = OperatorMatrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

OperatorMatrix pauli_x() {
    OperatorMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

OperatorMatrix pauli_y() {
    // basis order (g, e); sy = i(sm - sp) so that [sz, sx] = 2i sy
    OperatorMatrix m(2, 2);
    m << 0.0, Complex(0.0, 1.0), Complex(0.0, -1.0), 0.0;
    return m;
}

OperatorMatrix pauli_z() {
    OperatorMatrix m(2, 2);
    m << -1.0, 0.0, 0.0, 1.0;
    return m;
}

OperatorMatrix qubit_lowering() {
    OperatorMatrix m = OperatorMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

OperatorMatrix kron(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
    OperatorMatrix out(lhs.rows() * rhs.rows(), lhs.cols() * rhs.cols());
    for (Eigen::Index i = 0; i < lhs.rows(); ++i) {
        for (Eigen::Index j = 0; j < lhs.cols(); ++j) {
            out.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) = lhs(i, j) * rhs;
        }
    }
    return out;
}

OperatorSet build_operators(const HilbertConfig& cfg) {
    cfg.validate();
    const OperatorMatrix qid = OperatorMatrix::Identity(2, 2);
    const OperatorMatrix cid = OperatorMatrix::Identity(cfg.cavity_dim(), cfg.cavity_dim());
    const OperatorMatrix a = cavity_annihilation(cfg.n_max);

    OperatorSet ops;
    ops.a = kron(qid, a);
    ops.adag = ops.a.adjoint();
    ops.n = ops.adag * ops.a;
    ops.sx = kron(pauli_x(), cid);
    ops.sy = kron(pauli_y(), cid);
    ops.sz = kron(pauli_z(), cid);
    ops.sm = kron(qubit_lowering(), cid);
    ops.identity = OperatorMatrix::Identity(cfg.dim(), cfg.dim());
    return ops;
}

OperatorMatrix apply_dissipator(const OperatorMatrix& op, const DensityMatrix& rho) {
    require_same_shape(op, rho, "apply_dissipator");
    const OperatorMatrix ada = op.adjoint() * op;
    return op * rho * op.adjoint() - 0.5 * (ada * rho + rho * ada);
}

OperatorMatrix apply_measurement_superop(const OperatorMatrix& op, const DensityMatrix& rho) {
    require_same_shape(op, rho, "apply_measurement_superop");
    OperatorMatrix arho = op * rho;
    OperatorMatrix sum = arho + arho.adjoint();
    // tr(A rho + rho A^+) = 2 Re tr(A rho)
    const Complex tr = sum.trace();
    return sum - tr * rho;
}

OperatorMatrix commutator(const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
    return lhs * rhs - rhs * lhs;
}

Complex expectation(const OperatorMatrix& op, const DensityMatrix& rho) {
    require_same_shape(op, rho, "expectation");
    // tr(A rho) without forming the product
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < op.rows(); ++i) acc += op.row(i).transpose().cwiseProduct(rho.col(i)).sum();
    return acc;
}

double expectation_real(const OperatorMatrix& op, const DensityMatrix& rho) {
    return expectation(op, rho).real();
}

double max_antihermitian(const OperatorMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const DensityMatrix& rho) {
    const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

DensityCheck check_density(const DensityMatrix& rho) {
    DensityCheck c;
    c.hermiticity = max_antihermitian(rho);
    c.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
    c.min_eigenvalue = min_eigenvalue(rho);
    return c;
}

DensityMatrix pure_state(const Eigen::VectorXcd& psi) {
    const Eigen::VectorXcd v = psi / psi.norm();
    return v * v.adjoint();
}

DensityMatrix basis_state(const HilbertConfig& cfg, int qubit, int photons) {
    cfg.validate();
    if (qubit < 0 || qubit > 1 || photons < 0 || photons > cfg.n_max) {
        throw Error("basis_state: index out of range");
    }
    DensityMatrix rho = DensityMatrix::Zero(cfg.dim(), cfg.dim());
    const int idx = qubit * cfg.cavity_dim() + photons;
    rho(idx, idx) = 1.0;
    return rho;
}

DensityMatrix coherent_state(const HilbertConfig& cfg, int qubit, Complex alpha) {
    cfg.validate();
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(cfg.dim());
    Complex c = std::exp(-0.5 * std::norm(alpha));
    for (int n = 0; n <= cfg.n_max; ++n) {
        psi(qubit * cfg.cavity_dim() + n) = c;
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    return pure_state(psi);
}

OperatorTerms::OperatorTerms(const OperatorMatrix& op, double drop_below) : dim_(static_cast<int>(op.rows())) {
    if (op.rows() != op.cols()) throw Error("OperatorTerms: operator must be square");
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            if (std::abs(op(i, j)) > drop_below) entries_.push_back({i, j, op(i, j)});
        }
    }
}

void OperatorTerms::add_left_product(const Eigen::MatrixXcd& m, Eigen::MatrixXcd& out, Complex scale) const {
    for (const auto& e : entries_) out.row(e.row) += (scale * e.value) * m.row(e.col);
}

void OperatorTerms::add_sandwich(const Eigen::MatrixXcd& m, Eigen::MatrixXcd& out, double scale) const {
    for (const auto& l : entries_) {
        const Complex lv = scale * l.value;
        for (const auto& r : entries_) out(l.row, r.row) += lv * std::conj(r.value) * m(l.col, r.col);
    }
}

}  // namespace stoq::quantum
