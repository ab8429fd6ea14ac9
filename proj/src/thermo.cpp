#include "rabi/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rabi/error.hpp"

namespace rabi {

std::vector<Sample> Trajectory::regular() const {
    std::vector<Sample> out;
    out.reserve(samples.size());
    std::copy_if(samples.begin(), samples.end(), std::back_inserter(out), [](const Sample& s) { return !s.dense; });
    return out;
}

const Sample& Trajectory::min_work() const {
    if (samples.empty()) throw std::logic_error("empty trajectory");
    return *std::min_element(samples.begin(), samples.end(),
                             [](const Sample& a, const Sample& b) { return a.work < b.work; });
}

double internal_energy(const QuantumState& state, const Matrix& hamiltonian) {
    const cplx u = state.expectation(hamiltonian);
    if (std::abs(u.imag()) > 1e-6) {
        std::ostringstream msg;
        msg << "internal energy has imaginary part " << u.imag() << "; state or Hamiltonian is corrupted";
        throw NumericalError(msg.str());
    }
    return u.real();
}

double excitations(const QuantumState& state, const JointSpace& space) {
    const Eigen::VectorXd pops = state.populations();
    double n = 0.0;
    for (Index i = 0; i < space.dim(); ++i) {
        n += pops(i) * (space.photons(i) + (space.atom(i) == Atom::excited ? 1.0 : 0.0));
    }
    return n;
}

double excited_population(const QuantumState& state, const JointSpace& space) {
    const Eigen::VectorXd pops = state.populations();
    return pops.tail(space.fock_levels()).sum();
}

double sigma_z_expectation(const QuantumState& state, const JointSpace& space) {
    const Eigen::VectorXd pops = state.populations();
    return pops.tail(space.fock_levels()).sum() - pops.head(space.fock_levels()).sum();
}

double trace_work_rate(const QuantumState& state, const Matrix& hamiltonian_rate) {
    return state.expectation(hamiltonian_rate).real();
}

double WorkIntegrator::add_step(double t0, double h, double sz0, double sz_mid, double sz1) {
    const double f0 = 0.5 * spec_->omega_dot_at(t0) * sz0;
    const double fm = 0.5 * spec_->omega_dot_at(t0 + 0.5 * h) * sz_mid;
    const double f1 = 0.5 * spec_->omega_dot_at(t0 + h) * sz1;
    const double dw = simpson(h, f0, fm, f1);
    value_ += dw;
    return dw;
}

RelationReport work_energy_relation_check(const Trajectory& trajectory, const SystemParams& params) {
    RelationReport report;
    for (const Sample& s : trajectory.samples) {
        const double predicted = s.excitations * params.omega - params.detuning() * s.excited_population;
        const double dev = std::abs(s.work - predicted);
        if (dev > report.max_deviation) {
            report.max_deviation = dev;
            report.at_time = s.t;
        }
    }
    return report;
}

FirstLawReport first_law_check(const Trajectory& trajectory, double tolerance) {
    FirstLawReport report;
    if (trajectory.empty()) return report;
    const double u0 = trajectory.front().internal_energy;
    for (const Sample& s : trajectory.samples) {
        const double residual = std::abs(s.internal_energy - u0 - s.work - s.heat_direct);
        if (residual > report.max_residual) {
            report.max_residual = residual;
            report.at_time = s.t;
        }
    }
    report.ok = report.max_residual < tolerance;
    return report;
}

double drive_timescale(const SystemParams& params, double epsilon) {
    if (!(epsilon > 0.0)) return std::numeric_limits<double>::infinity();
    return 2.0 * params.detuning_sum() / (params.g * epsilon);
}

}  // namespace rabi
