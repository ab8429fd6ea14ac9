#include <doctest.h>

#include <cmath>

#include "rabi/error.hpp"
#include "rabi/hilbert.hpp"
#include "rabi/thermo.hpp"

using namespace rabi;

TEST_CASE("space dimensions and operators") {
    CHECK_THROWS_AS(build_space(1), ConfigError);
    CHECK(build_space(15).dim() == 32);
    const JointSpace s = build_space(6);
    const Vector g2 = s.basis_vector(Atom::ground, 2);
    CHECK(std::abs((g2.adjoint() * s.number() * g2)(0, 0) - 2.0) < 1e-14);

    const Matrix comm = s.a() * s.a_dag() - s.a_dag() * s.a();
    for (int atom = 0; atom < 2; ++atom) {
        for (int n = 0; n < s.n_max(); ++n) {
            const Index i = s.index(static_cast<Atom>(atom), n);
            CHECK(std::abs(comm(i, i) - 1.0) < 1e-12);
        }
    }
    const Matrix id = s.identity();
    CHECK((s.sigma_z() * s.sigma_z() - id).norm() < 1e-14);
    CHECK((s.sigma_plus() * s.sigma_minus() + s.sigma_minus() * s.sigma_plus() - id).norm() < 1e-14);
    for (Index i = 0; i < s.dim(); ++i) CHECK(std::abs(s.number()(i, i).real() - s.photons(i)) < 1e-14);
}

TEST_CASE("system parameters") {
    const SystemParams p = SystemParams::from_ratios(0.05, 8.0);
    CHECK(p.omega0 == doctest::Approx(0.6));
    CHECK(p.detuning() == doctest::Approx(0.4));
    CHECK(p.detuning_sum() == doctest::Approx(1.6));
    CHECK(p.dispersive(3));
    CHECK_FALSE(p.dispersive(18));
    SystemParams bad = p;
    bad.g = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = p;
    bad.omega0 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fock states") {
    const JointSpace s(10);
    CHECK(excitations(fock_ground_state(s, 0), s) == doctest::Approx(0.0));
    const QuantumState g3 = fock_ground_state(s, 3);
    CHECK(sigma_z_expectation(g3, s) == doctest::Approx(-1.0));
    CHECK(g3.expectation(s.number()).real() == doctest::Approx(3.0));
    CHECK_THROWS_AS(fock_ground_state(s, 11), ConfigError);
    CHECK(excitations(fock_state(s, Atom::excited, 1), s) == doctest::Approx(2.0));
}

TEST_CASE("thermal states") {
    CHECK(thermal_population(1.5, 3) == doctest::Approx(0.0864).epsilon(1e-3));
    CHECK(thermal_population(1.5, 4) == doctest::Approx(0.0518).epsilon(2e-3));
    CHECK(std::abs(thermal_population(1.5, 3) - 0.086) < 1e-3);
    CHECK(std::abs(thermal_population(1.5, 4) - 0.052) < 1e-3);

    double tail = 0.0;
    for (int n = 16; n < 2000; ++n) tail += thermal_population(1.5, n);
    CHECK(thermal_tail_mass(1.5, 15) == doctest::Approx(tail).epsilon(1e-10));
    // n_max = 15 leaves 2.8e-4 above the cut, so the default threshold rejects it
    CHECK(tail > 1e-4);
    CHECK_THROWS_AS(thermal_ground_state(JointSpace(15), 1.5), TruncationError);
    ThermalOptions renorm;
    renorm.auto_renormalize = true;
    CHECK(thermal_ground_state(JointSpace(15), 1.5, renorm).trace() == doctest::Approx(1.0));
    CHECK(thermal_tail_mass(1.5, 18) < 1e-4);

    const JointSpace s(18);
    const QuantumState rho = thermal_ground_state(s, 1.5);
    CHECK(excitations(rho, s) == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(rho.check().empty());

    const JointSpace s3(4);
    const Matrix zero = thermal_ground_state(s3, 0.0).to_density();
    const Matrix ref = fock_ground_state(s3, 0).to_density();
    CHECK((zero - ref).norm() < 1e-14);
}

TEST_CASE("state validation") {
    const JointSpace s(3);
    Vector psi = Vector::Zero(s.dim());
    psi(0) = 1.0 + 1e-6;
    CHECK_FALSE(QuantumState::pure(psi).check().empty());
    psi(0) = 1.0;
    CHECK(QuantumState::pure(psi).check().empty());
    Matrix rho = Matrix::Zero(s.dim(), s.dim());
    rho(0, 0) = 1.1;
    rho(1, 1) = -0.1;
    CHECK(QuantumState::mixed(rho).check(false).empty());
    CHECK_FALSE(QuantumState::mixed(rho).check(true).empty());
    rho(0, 1) = 0.2;
    CHECK_FALSE(QuantumState::mixed(rho).check(false).empty());
}
