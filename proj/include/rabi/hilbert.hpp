#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace rabi {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

enum class Atom : int { ground = 0, excited = 1 };

/*
 * Truncated joint space of one cavity mode and a two-level atom.
 *
 * Basis ordering is atom-major and is the only ordering used anywhere in the
 * library:
 *
 *     |g,0>, |g,1>, ..., |g,n_max>, |e,0>, |e,1>, ..., |e,n_max>
 *
 * so index(atom, n) = atom * (n_max + 1) + n.  The field operators are the
 * truncated matrices; [a, a^dag] = 1 holds everywhere except on the top Fock
 * level, where the truncation edge gives 1 - (n_max + 1).
 */
class JointSpace {
public:
    explicit JointSpace(int n_max);

    int n_max() const { return n_max_; }
    int fock_levels() const { return n_max_ + 1; }
    Index dim() const { return 2 * static_cast<Index>(n_max_ + 1); }

    Index index(Atom atom, int n) const;
    int photons(Index i) const { return static_cast<int>(i % fock_levels()); }
    Atom atom(Index i) const { return i < fock_levels() ? Atom::ground : Atom::excited; }
    /// Eigenvalue of sigma_z on basis state i (+1 excited, -1 ground).
    double sigma_z_value(Index i) const { return atom(i) == Atom::excited ? 1.0 : -1.0; }

    const Matrix& a() const { return a_; }
    const Matrix& a_dag() const { return a_dag_; }
    const Matrix& number() const { return number_; }
    const Matrix& sigma_z() const { return sigma_z_; }
    const Matrix& sigma_plus() const { return sigma_plus_; }
    const Matrix& sigma_minus() const { return sigma_minus_; }
    const Matrix& identity() const { return identity_; }
    /// |e><e| on the joint space.
    const Matrix& excited_projector() const { return excited_projector_; }

    /// Basis vector |atom, n>.
    Vector basis_vector(Atom atom, int n) const;

private:
    int n_max_;
    Matrix a_, a_dag_, number_, sigma_z_, sigma_plus_, sigma_minus_, identity_, excited_projector_;
};

JointSpace build_space(int n_max);

/*
 * Rabi-model parameters in units with hbar = 1.
 *
 * The derived quantities follow the usual dispersive expansion:
 *   detuning         D-  = omega - omega0
 *   detuning_sum     D+  = omega + omega0
 *   shift_minus      d-  = g^2 / D-
 *   shift_plus       d+  = g^2 / D+
 *   kerr             alpha = g^4 / D-^3
 *   detuning_sign    D = sign(D-)
 */
struct SystemParams {
    double omega = 1.0;
    double omega0 = 0.6;
    double g = 0.05;

    /// Build from the dimensionless ratios used in scenario files (omega = 1).
    static SystemParams from_ratios(double g_over_omega, double detuning_over_g);

    double detuning() const { return omega - omega0; }
    double detuning_sum() const { return omega + omega0; }
    double shift_minus() const { return g * g / detuning(); }
    double shift_plus() const { return g * g / detuning_sum(); }
    double kerr() const;
    double detuning_sign() const { return detuning() > 0.0 ? 1.0 : -1.0; }

    /// Throws ConfigError unless g > 0, omega > 0, omega0 > 0 and D- != 0.
    void validate() const;

    /// g sqrt(n_max) < |D-|/2.  Outside this range the dressed analytics are
    /// only qualitative; callers warn but do not reject.
    bool dispersive(int n_max) const;
};

/// Density operator or pure amplitude vector on a JointSpace.
class QuantumState {
public:
    static QuantumState pure(Vector psi);
    static QuantumState mixed(Matrix rho);

    bool is_pure() const { return std::holds_alternative<Vector>(payload_); }
    Index dim() const;

    const Vector& vector() const;  ///< throws std::logic_error on mixed states
    const Matrix& density() const; ///< throws std::logic_error on pure states
    Matrix to_density() const;

    /// <op> = Tr(rho op) or <psi|op|psi>.
    cplx expectation(const Matrix& op) const;
    /// Diagonal of the density matrix in the joint basis.
    Eigen::VectorXd populations() const;
    double trace() const;
    double purity() const;
    double min_eigenvalue() const;

    /// Empty string when the state satisfies its invariants, otherwise a
    /// description of the first violation.  Positivity is only checked when
    /// check_positivity is set (it needs an eigensolve).
    std::string check(bool check_positivity = true) const;
    /// Throws NumericalError when check() reports a violation.
    void validate(bool check_positivity = true) const;

    static constexpr double norm_tolerance = 1e-9;
    static constexpr double hermiticity_tolerance = 1e-9;
    static constexpr double positivity_tolerance = 1e-8;

private:
    explicit QuantumState(std::variant<Vector, Matrix> payload) : payload_(std::move(payload)) {}
    std::variant<Vector, Matrix> payload_;
};

QuantumState fock_state(const JointSpace& space, Atom atom, int n);

/// Pure |g, n>.  Throws ConfigError when n is outside [0, n_max].
QuantumState fock_ground_state(const JointSpace& space, int n);

struct ThermalOptions {
    /// Largest tolerated population above n_max before truncation.
    double tail_threshold = 1e-4;
    /// Renormalize on the truncated space instead of throwing TruncationError.
    bool auto_renormalize = false;
};

/// Bose-Einstein occupation p_n = nbar^n / (nbar + 1)^(n + 1).
double thermal_population(double n_bar, int n);
/// Population above n_max, sum_{n > n_max} p_n = (nbar / (nbar + 1))^(n_max + 1).
double thermal_tail_mass(double n_bar, int n_max);

/// |g><g| (x) thermal field with mean photon number n_bar, renormalized on the
/// truncated space.
QuantumState thermal_ground_state(const JointSpace& space, double n_bar, const ThermalOptions& options = {});

}  // namespace rabi
