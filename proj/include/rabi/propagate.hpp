#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rabi/hilbert.hpp"
#include "rabi/modulation.hpp"
#include "rabi/thermo.hpp"

namespace rabi {

/// Bose-Einstein occupation 1 / (exp(frequency / kT) - 1); kT in energy units.
double bose_occupation(double frequency, double kT);

/*
 * Rates of the standard optical master equation
 *
 *   L(rho) = gamma (1 + n_a) D[sigma_-] + gamma n_a D[sigma_+]
 *          + kappa (1 + n_c) D[a]       + kappa n_c D[a^dag]
 *
 * with D[c] rho = c rho c^dag - {c^dag c, rho} / 2.
 */
struct LindbladParams {
    double kappa = 0.0;
    double gamma = 0.0;
    double n_cavity = 0.0;
    double n_atom = 0.0;
    /// k_B T_r in energy units, when the occupations come from one reservoir temperature.
    std::optional<double> reservoir_kT;

    /// Both occupations from a shared reservoir temperature.
    static LindbladParams from_temperature(double kappa, double gamma, double kT, const SystemParams& params);
    /// Temperature fixed by the cavity occupation; the atomic occupation follows from it.
    static LindbladParams from_cavity_occupation(double kappa, double gamma, double n_cavity,
                                                 const SystemParams& params);

    /// Throws ConfigError on negative rates or occupations inconsistent with reservoir_kT (1e-6).
    void validate(const SystemParams& params) const;
};

enum class IntegrationMethod { rk4, dopri5 };

struct TimeSpan {
    double t0 = 0.0;
    double t1 = 0.0;
};

struct SamplingPlan {
    /// Evenly spaced records over the span (plus the initial instant).
    int records = 2000;
    /// Intervals recorded at samples_per_period samples per drive period.
    std::vector<TimeSpan> dense_windows;
    int samples_per_period = 50;
};

struct IntegratorConfig {
    IntegrationMethod method = IntegrationMethod::dopri5;
    /// Upper bound on the step.  Zero selects 2 pi / (steps_per_period * nu_max)
    /// with nu_max the fastest of the drive frequency and the coupling
    /// frequencies omega +- omega0.
    double max_step = 0.0;
    int steps_per_period = 50;
    double rtol = 1e-10;  ///< adaptive only
    double atol = 1e-12;  ///< adaptive only
    double min_step = 1e-8;
    SamplingPlan sampling;

    /// Limit on the population of the two highest Fock levels at any record.
    double truncation_limit = 1e-3;
    bool enforce_truncation_audit = true;
    /// Eigensolve at every record; throws NumericalError on negative eigenvalues.
    bool check_positivity = false;
    /// Accumulate Tr(rho dH/dt) alongside the sigma_z form of the work.
    bool track_trace_work = false;
    /// Populations |<v|psi>|^2 (or <v|rho|v>) recorded for each vector.
    std::vector<Vector> projections;
    /// Called at every record with the lab-frame state.
    std::function<void(double, const QuantumState&)> observer;
};

/// H(t) = omega a^dag a + Omega(t)/2 sigma_z + g (a + a^dag)(sigma_+ + sigma_-).
Matrix hamiltonian_at(const JointSpace& space, const SystemParams& params, const ModulationSpec& spec, double t);
/// dH/dt = Omega_dot(t)/2 sigma_z.
Matrix hamiltonian_rate_at(const JointSpace& space, const ModulationSpec& spec, double t);

/// The step actually used by the fixed-step integrator for this run.
double default_step(const SystemParams& params, const ModulationSpec& spec, TimeSpan span,
                    const IntegratorConfig& config);

/*
 * Unitary evolution.  Pure states are propagated as amplitude vectors, mixed
 * states through the von Neumann equation.
 *
 * Internally the state is carried in the interaction picture of the bare
 * part omega a^dag a + omega0/2 sigma_z.  This is an exact change of frame
 * (no rotating-wave approximation): the drive term (Omega(t) - omega0)/2
 * sigma_z and all counter-rotating couplings stay in the generator, and every
 * recorded observable commutes with the frame rotation or is evaluated with
 * the full lab Hamiltonian.
 */
Trajectory evolve_unitary(const QuantumState& initial, const JointSpace& space, const SystemParams& params,
                          const ModulationSpec& spec, TimeSpan span, const IntegratorConfig& config = {});

/// Lindblad evolution; pure inputs are promoted to density matrices.
Trajectory evolve_lindblad(const QuantumState& initial, const JointSpace& space, const SystemParams& params,
                           const ModulationSpec& spec, const LindbladParams& lindblad, TimeSpan span,
                           const IntegratorConfig& config = {});

/// ||d rho / dt|| (max abs entry) of the lab-frame Lindblad generator at time t.
double lindblad_rate_norm(const QuantumState& state, const JointSpace& space, const SystemParams& params,
                          const ModulationSpec& spec, const LindbladParams& lindblad, double t);

}  // namespace rabi
