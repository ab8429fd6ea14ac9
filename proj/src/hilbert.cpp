#include "rabi/hilbert.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rabi/error.hpp"

namespace rabi {

JointSpace::JointSpace(int n_max) : n_max_(n_max) {
    if (n_max < 3) {
        throw ConfigError("n_max must be >= 3 (the ADCE transition needs |g,3>), got " + std::to_string(n_max));
    }
    const Index levels = fock_levels();
    const Index d = dim();

    Eigen::MatrixXcd field = Eigen::MatrixXcd::Zero(levels, levels);
    for (Index n = 1; n < levels; ++n) {
        field(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    const Eigen::MatrixXcd id_field = Eigen::MatrixXcd::Identity(levels, levels);
    Eigen::Matrix2cd sp = Eigen::Matrix2cd::Zero();
    sp(1, 0) = 1.0;  // |e><g|
    Eigen::Matrix2cd sz = Eigen::Matrix2cd::Zero();
    sz(0, 0) = -1.0;
    sz(1, 1) = 1.0;

    // kron(atom, field) gives the atom-major ordering.
    auto kron = [&](const Eigen::Matrix2cd& atom, const Eigen::MatrixXcd& f) {
        Matrix out = Matrix::Zero(d, d);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                if (atom(i, j) != cplx(0.0)) {
                    out.block(i * levels, j * levels, levels, levels) = atom(i, j) * f;
                }
            }
        }
        return out;
    };

    a_ = kron(Eigen::Matrix2cd::Identity(), field);
    a_dag_ = a_.adjoint();
    number_ = a_dag_ * a_;
    sigma_z_ = kron(sz, id_field);
    sigma_plus_ = kron(sp, id_field);
    sigma_minus_ = sigma_plus_.adjoint();
    identity_ = Matrix::Identity(d, d);
    excited_projector_ = sigma_plus_ * sigma_minus_;
}

Index JointSpace::index(Atom atom, int n) const {
    if (n < 0 || n > n_max_) {
        throw ConfigError("Fock index " + std::to_string(n) + " outside [0, " + std::to_string(n_max_) + "]");
    }
    return static_cast<Index>(atom) * fock_levels() + n;
}

Vector JointSpace::basis_vector(Atom atom, int n) const {
    Vector v = Vector::Zero(dim());
    v(index(atom, n)) = 1.0;
    return v;
}

JointSpace build_space(int n_max) { return JointSpace(n_max); }

SystemParams SystemParams::from_ratios(double g_over_omega, double detuning_over_g) {
    SystemParams p;
    p.omega = 1.0;
    p.g = g_over_omega;
    p.omega0 = p.omega - detuning_over_g * p.g;
    p.validate();
    return p;
}

double SystemParams::kerr() const {
    const double d = detuning();
    return g * g * g * g / (d * d * d);
}

void SystemParams::validate() const {
    if (!(omega > 0.0)) throw ConfigError("omega must be positive");
    if (!(omega0 > 0.0)) throw ConfigError("omega0 must be positive");
    if (!(g > 0.0)) throw ConfigError("g must be positive");
    if (detuning() == 0.0) throw ConfigError("detuning omega - omega0 must be nonzero");
}

bool SystemParams::dispersive(int n_max) const {
    return g * std::sqrt(static_cast<double>(n_max)) < std::abs(detuning()) / 2.0;
}

QuantumState QuantumState::pure(Vector psi) { return QuantumState(std::move(psi)); }

QuantumState QuantumState::mixed(Matrix rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("density matrix must be square");
    return QuantumState(std::move(rho));
}

Index QuantumState::dim() const {
    return is_pure() ? std::get<Vector>(payload_).size() : std::get<Matrix>(payload_).rows();
}

const Vector& QuantumState::vector() const {
    if (!is_pure()) throw std::logic_error("state is mixed; no amplitude vector");
    return std::get<Vector>(payload_);
}

const Matrix& QuantumState::density() const {
    if (is_pure()) throw std::logic_error("state is pure; use to_density()");
    return std::get<Matrix>(payload_);
}

Matrix QuantumState::to_density() const {
    if (is_pure()) {
        const Vector& psi = std::get<Vector>(payload_);
        return psi * psi.adjoint();
    }
    return std::get<Matrix>(payload_);
}

cplx QuantumState::expectation(const Matrix& op) const {
    if (op.rows() != dim() || op.cols() != dim()) throw std::invalid_argument("operator dimension mismatch");
    if (is_pure()) {
        const Vector& psi = std::get<Vector>(payload_);
        return psi.dot(op * psi);
    }
    return (std::get<Matrix>(payload_) * op).trace();
}

Eigen::VectorXd QuantumState::populations() const {
    if (is_pure()) return std::get<Vector>(payload_).cwiseAbs2();
    return std::get<Matrix>(payload_).diagonal().real();
}

double QuantumState::trace() const {
    if (is_pure()) return std::get<Vector>(payload_).squaredNorm();
    return std::get<Matrix>(payload_).trace().real();
}

double QuantumState::purity() const {
    if (is_pure()) {
        const double n = std::get<Vector>(payload_).squaredNorm();
        return n * n;
    }
    const Matrix& rho = std::get<Matrix>(payload_);
    return (rho * rho).trace().real();
}

double QuantumState::min_eigenvalue() const {
    if (is_pure()) return 0.0;
    const Matrix& rho = std::get<Matrix>(payload_);
    const Matrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

std::string QuantumState::check(bool check_positivity) const {
    std::ostringstream msg;
    if (is_pure()) {
        const double norm = std::get<Vector>(payload_).norm();
        if (!std::isfinite(norm) || std::abs(norm - 1.0) > norm_tolerance) {
            msg << "pure state norm " << norm << " differs from 1";
        }
        return msg.str();
    }
    const Matrix& rho = std::get<Matrix>(payload_);
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (!std::isfinite(herm) || herm > hermiticity_tolerance) {
        msg << "density matrix not Hermitian (max |rho - rho^dag| = " << herm << ")";
        return msg.str();
    }
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > norm_tolerance) {
        msg << "density matrix trace " << tr << " differs from 1";
        return msg.str();
    }
    if (check_positivity) {
        const double lmin = min_eigenvalue();
        if (lmin < -positivity_tolerance) msg << "density matrix has negative eigenvalue " << lmin;
    }
    return msg.str();
}

void QuantumState::validate(bool check_positivity) const {
    const std::string problem = check(check_positivity);
    if (!problem.empty()) throw NumericalError(problem);
}

QuantumState fock_state(const JointSpace& space, Atom atom, int n) {
    return QuantumState::pure(space.basis_vector(atom, n));
}

QuantumState fock_ground_state(const JointSpace& space, int n) { return fock_state(space, Atom::ground, n); }

double thermal_population(double n_bar, int n) {
    if (n_bar == 0.0) return n == 0 ? 1.0 : 0.0;
    // log form keeps large n finite
    return std::exp(n * std::log(n_bar) - (n + 1) * std::log1p(n_bar));
}

double thermal_tail_mass(double n_bar, int n_max) {
    if (n_bar == 0.0) return 0.0;
    return std::pow(n_bar / (n_bar + 1.0), n_max + 1);
}

QuantumState thermal_ground_state(const JointSpace& space, double n_bar, const ThermalOptions& options) {
    if (!(n_bar >= 0.0) || !std::isfinite(n_bar)) throw ConfigError("mean photon number must be >= 0");
    const double tail = thermal_tail_mass(n_bar, space.n_max());
    if (tail >= options.tail_threshold && !options.auto_renormalize) {
        std::ostringstream msg;
        msg << "thermal tail mass " << tail << " above n_max=" << space.n_max() << " exceeds threshold "
            << options.tail_threshold << "; raise n_max or enable auto_renormalize";
        throw TruncationError(msg.str());
    }
    Matrix rho = Matrix::Zero(space.dim(), space.dim());
    double kept = 0.0;
    for (int n = 0; n <= space.n_max(); ++n) kept += thermal_population(n_bar, n);
    for (int n = 0; n <= space.n_max(); ++n) {
        const Index i = space.index(Atom::ground, n);
        rho(i, i) = thermal_population(n_bar, n) / kept;
    }
    return QuantumState::mixed(std::move(rho));
}

}  // namespace rabi
