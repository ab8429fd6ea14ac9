#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rabi/hilbert.hpp"
#include "rabi/modulation.hpp"

namespace rabi {

/// One recorded instant.  Energies in units of hbar*omega when omega = 1.
struct Sample {
    double t = 0.0;
    double internal_energy = 0.0;  ///< U = Tr(rho H(t))
    double work = 0.0;             ///< W = (1/2) int Omega_dot <sigma_z> dt
    double heat = 0.0;             ///< Q = U(t) - U(0) - W
    double excitations = 0.0;      ///< N = <a^dag a> + <|e><e|>
    double excited_population = 0.0;
    double sigma_z = 0.0;
    double top_fock_population = 0.0;  ///< population of the two highest Fock levels
    /// Heat from an independent quadrature of Tr(L(rho) H); zero for unitary runs.
    double heat_direct = 0.0;
    /// Work from Tr(rho dH/dt) when tracked, NaN otherwise.
    double trace_work = std::numeric_limits<double>::quiet_NaN();
    /// Populations on caller-supplied projection vectors.
    std::vector<double> projections;
    /// Set for samples taken inside a dense sampling window.
    bool dense = false;
};

struct TrajectoryMetadata {
    std::string scenario;
    std::string params_hash;
    double tau = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> notes;
};

struct Trajectory {
    std::vector<Sample> samples;
    TrajectoryMetadata metadata;
    double max_top_fock_population = 0.0;
    double max_trace_error = 0.0;
    bool dissipative = false;
    std::size_t steps = 0;
    std::optional<QuantumState> final_state;

    bool empty() const { return samples.empty(); }
    const Sample& front() const { return samples.front(); }
    const Sample& back() const { return samples.back(); }
    /// Samples on the regular grid only (dense-window samples removed).
    std::vector<Sample> regular() const;
    /// Sample with the smallest work.
    const Sample& min_work() const;
};

/// U = Tr(rho H).  Throws NumericalError when |Im U| > 1e-6.
double internal_energy(const QuantumState& state, const Matrix& hamiltonian);
/// N = Tr(rho a^dag a) + Tr(rho |e><e|).
double excitations(const QuantumState& state, const JointSpace& space);
double excited_population(const QuantumState& state, const JointSpace& space);
double sigma_z_expectation(const QuantumState& state, const JointSpace& space);
/// Tr(rho dH/dt), the general work integrand.
double trace_work_rate(const QuantumState& state, const Matrix& hamiltonian_rate);

/*
 * Running quadrature of W(t) = (1/2) int_0^t Omega_dot(t') <sigma_z(t')> dt'.
 *
 * Each step contributes a Simpson panel over [t0, t0 + h] using <sigma_z> at
 * the two ends and at the midpoint.  With a fourth-order propagator and a
 * fourth-order midpoint state the work carries the propagator's order.
 */
class WorkIntegrator {
public:
    explicit WorkIntegrator(const ModulationSpec& spec) : spec_(&spec) {}

    /// Returns the increment added for this step.
    double add_step(double t0, double h, double sz0, double sz_mid, double sz1);
    double value() const { return value_; }

    static double simpson(double h, double f0, double fm, double f1) { return h / 6.0 * (f0 + 4.0 * fm + f1); }

private:
    const ModulationSpec* spec_;
    double value_ = 0.0;
};

struct RelationReport {
    double max_deviation = 0.0;
    double at_time = 0.0;
};

/// max_t |W - (N omega - D- P_e)| over the trajectory.
RelationReport work_energy_relation_check(const Trajectory& trajectory, const SystemParams& params);

struct FirstLawReport {
    double max_residual = 0.0;  ///< max |U - U(0) - W - Q_direct|
    double at_time = 0.0;
    bool ok = true;
};

FirstLawReport first_law_check(const Trajectory& trajectory, double tolerance = 1e-4);

/// tau = 2 D+ / (g eps), the drive timescale used for reporting times.
double drive_timescale(const SystemParams& params, double epsilon);

}  // namespace rabi
