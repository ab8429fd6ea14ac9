#include "rabi/dressed.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rabi/error.hpp"

namespace rabi {

namespace {

constexpr cplx I(0.0, 1.0);

Matrix first_order_transformation(const JointSpace& space, double Lambda, double xi_U) {
    const Matrix& a = space.a();
    const Matrix& ad = space.a_dag();
    const Matrix S = Lambda * (a * space.sigma_minus() - ad * space.sigma_plus()) +
                     xi_U * (a * a - ad * ad) * space.sigma_z();
    return space.identity() + S;
}

Matrix undriven_hamiltonian(const SystemParams& params, const JointSpace& space) {
    const Matrix coupling = (space.a() + space.a_dag()) * (space.sigma_plus() + space.sigma_minus());
    return params.omega * space.number() + 0.5 * params.omega0 * space.sigma_z() + params.g * coupling;
}

}  // namespace

std::string DressedLevel::label() const {
    if (m == 0) return "R0";
    std::ostringstream out;
    out << "R" << m << (branch > 0 ? "+" : "-");
    return out.str();
}

const DressedLevel& DressedSpectrum::level(int m, int branch) const {
    for (const DressedLevel& l : levels) {
        if (l.m == m && (m == 0 || l.branch == branch)) return l;
    }
    std::ostringstream msg;
    msg << "no dressed level m=" << m << " branch=" << branch;
    throw ConfigError(msg.str());
}

const DressedLevel& DressedSpectrum::relative(int m, int sign) const {
    if (m == 0) return level(0, 0);
    return level(m, sign * static_cast<int>(detuning_sign));
}

double ground_energy(const SystemParams& params) { return -0.5 * (params.omega0 + params.shift_plus()); }

double doublet_energy(const SystemParams& params, int m, int branch) {
    const double dp = params.shift_plus();
    const double x = params.detuning() - 2.0 * dp * m;
    const double root = std::sqrt(x * x + 4.0 * params.g * params.g * m);
    return params.omega * m - 0.5 * (params.omega + dp) + 0.5 * branch * root;
}

double mixing_angle(const SystemParams& params, int m, double shift_plus) {
    const double x = params.detuning() - 2.0 * shift_plus * m;
    const double root = std::sqrt(x * x + 4.0 * params.g * params.g * m);
    return std::atan2(x + root, 2.0 * params.g * std::sqrt(static_cast<double>(m)));
}

double dispersive_energy(const SystemParams& params, int m, int sign) {
    const double dm = params.shift_minus();
    const double dp = params.shift_plus();
    const double alpha = params.kerr();
    if (sign > 0) return (params.omega + dm - dp) * m - alpha * m * m + ground_energy(params);
    return (params.omega - dm + dp) * m + alpha * m * m - params.detuning() + ground_energy(params);
}

DressedSpectrum dressed_spectrum(const SystemParams& params, const JointSpace& space, SpectrumMode mode,
                                 std::vector<std::string>* warnings) {
    params.validate();
    if (warnings && !params.dispersive(space.n_max())) {
        std::ostringstream msg;
        msg << "g sqrt(n_max) = " << params.g * std::sqrt(static_cast<double>(space.n_max()))
            << " is not below |D-|/2; perturbative dressed states are only qualitative";
        warnings->push_back(msg.str());
    }
    DressedSpectrum spec;
    spec.mode = mode;
    spec.Lambda = params.g / params.detuning_sum();
    spec.xi_U = params.g * spec.Lambda / (2.0 * params.omega);
    spec.detuning_sign = params.detuning_sign();
    const double D = spec.detuning_sign;

    if (mode == SpectrumMode::full) {
        const Matrix U = first_order_transformation(space, spec.Lambda, spec.xi_U);
        auto dressed = [&](const Vector& bare) {
            Vector v = U * bare;
            return Vector(v / v.norm());
        };
        spec.levels.push_back({0, 0, ground_energy(params), 0.0, dressed(space.basis_vector(Atom::ground, 0))});
        for (int m = 1; m <= space.n_max(); ++m) {
            const double th = mixing_angle(params, m, params.shift_plus());
            const Vector g = space.basis_vector(Atom::ground, m);
            const Vector e = space.basis_vector(Atom::excited, m - 1);
            spec.levels.push_back(
                {m, -1, doublet_energy(params, m, -1), th, dressed(std::cos(th) * g - std::sin(th) * e)});
            spec.levels.push_back(
                {m, +1, doublet_energy(params, m, +1), th, dressed(std::sin(th) * g + std::cos(th) * e)});
        }
    } else {
        spec.levels.push_back({0, 0, ground_energy(params), 0.0, space.basis_vector(Atom::ground, 0)});
        for (int m = 1; m <= space.n_max(); ++m) {
            const double c = params.g * std::sqrt(static_cast<double>(m)) / params.detuning();
            const Vector g = space.basis_vector(Atom::ground, m);
            const Vector e = space.basis_vector(Atom::excited, m - 1);
            const Vector up = (g + c * e) / std::sqrt(1.0 + c * c);
            const Vector down = (e - c * g) / std::sqrt(1.0 + c * c);
            const double th = std::atan2(1.0, c);
            spec.levels.push_back({m, static_cast<int>(D), dispersive_energy(params, m, +1), th, up});
            spec.levels.push_back({m, -static_cast<int>(D), dispersive_energy(params, m, -1), th, down});
        }
    }
    std::stable_sort(spec.levels.begin(), spec.levels.end(),
                     [](const DressedLevel& a, const DressedLevel& b) { return a.energy < b.energy; });
    return spec;
}

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::dce: return "DCE";
        case Regime::ajc: return "AJC";
        case Regime::jc: return "JC";
        case Regime::adce: return "ADCE";
    }
    return "?";
}

Regime parse_regime(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "dce") return Regime::dce;
    if (t == "ajc") return Regime::ajc;
    if (t == "jc") return Regime::jc;
    if (t == "adce") return Regime::adce;
    throw ConfigError("unknown regime '" + text + "' (expected dce, ajc, jc or adce)");
}

cplx RegimeResonance::coupling(bool corrected) const {
    return corrected && lambda_corrected ? *lambda_corrected : lambda;
}

double RegimeResonance::transfer_time(bool corrected) const {
    const double l = std::abs(coupling(corrected));
    return l > 0.0 ? std::numbers::pi / (2.0 * l) : std::numeric_limits<double>::infinity();
}

std::pair<std::pair<Atom, int>, std::pair<Atom, int>> regime_transition(Regime regime, int J) {
    switch (regime) {
        case Regime::dce: return {{Atom::ground, J + 2}, {Atom::ground, J}};
        case Regime::ajc: return {{Atom::excited, 1}, {Atom::ground, 0}};
        case Regime::jc: return {{Atom::ground, J}, {Atom::excited, J - 1}};
        case Regime::adce: return {{Atom::ground, J}, {Atom::excited, J - 3}};
    }
    throw ConfigError("unknown regime");
}

double adce_correction_factor(const SystemParams& params) {
    const double w = params.omega;
    const double d = params.detuning();
    return (2.0 * w - d) / (2.0 * w + d) * ((w + d) / w);
}

std::pair<long long, long long> adce_correction_ratio(long long p, long long q) {
    if (q <= 0 || 2 * q + p == 0) throw ConfigError("invalid detuning ratio");
    long long num = (2 * q - p) * (q + p);
    long long den = (2 * q + p) * q;
    const long long d = std::gcd(num, den);
    num /= d;
    den /= d;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    return {num, den};
}

RegimeResonance resonance_frequency(const SystemParams& params, Regime regime, int J, double epsilon, double phi,
                                    ResonanceMode mode) {
    // g = 0 is allowed here: every coupling vanishes and the bare gaps remain
    if (params.g != 0.0) {
        params.validate();
    } else if (!(params.omega > 0.0) || !(params.omega0 > 0.0) || params.detuning() == 0.0) {
        throw ConfigError("resonance_frequency needs omega > 0, omega0 > 0 and D- != 0");
    }
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    const double D = params.detuning_sign();
    const double w = params.omega;
    const double dm = params.shift_minus();
    const double dp = params.shift_plus();
    const double alpha = params.kerr();
    const double g = params.g;
    const cplx drive = epsilon * std::exp(-I * phi);

    RegimeResonance r;
    r.regime = regime;
    r.J = J;
    // E_{m,D} and E_{m,-D} in the full perturbative spectrum (m = 0 gives E0)
    auto level = [&](int m, int sign) {
        if (m == 0) return ground_energy(params);
        return doublet_energy(params, m, sign * static_cast<int>(D));
    };
    switch (regime) {
        case Regime::dce: {
            if (J < 0 || J % 2 != 0) throw ConfigError("DCE ladder step must be an even photon number >= 0");
            r.eta = mode == ResonanceMode::dispersive ? 2.0 * w + 2.0 * (dm - dp) - 4.0 * alpha * (J + 1)
                                                      : level(J + 2, +1) - level(J, +1);
            r.lambda = -I * dm / (2.0 * params.detuning_sum()) * std::sqrt((J + 1.0) * (J + 2.0)) * drive;
            break;
        }
        case Regime::ajc: {
            r.J = 1;
            r.eta = mode == ResonanceMode::dispersive ? params.detuning_sum() - 2.0 * (dm - dp) + 4.0 * alpha
                                                      : level(2, -1) - level(0, +1);
            r.lambda = I * D * g / (2.0 * params.detuning_sum()) * drive;
            break;
        }
        case Regime::jc: {
            if (J < 1) throw ConfigError("JC resonance needs J >= 1");
            r.eta = mode == ResonanceMode::dispersive
                        ? std::abs(params.detuning() - 2.0 * dp * J) + 2.0 * std::abs(dm) * J -
                              2.0 * std::abs(alpha) * J * J
                        : std::abs(level(J, +1) - level(J, -1));
            r.lambda = -I * g / (2.0 * params.detuning()) * std::sqrt(static_cast<double>(J)) * epsilon *
                       std::exp(-D * I * phi);
            break;
        }
        case Regime::adce: {
            if (J < 3) throw ConfigError("ADCE resonance needs J >= 3");
            r.eta = mode == ResonanceMode::dispersive
                        ? 3.0 * w - params.omega0 + 2.0 * (dm - dp) * (J - 1) - 2.0 * alpha * (J * J - 2.0 * J + 2.0)
                        : level(J, +1) - level(J - 2, -1);
            r.lambda = -I * D * g * dm / (2.0 * params.detuning_sum() * params.detuning()) *
                       std::sqrt(J * (J - 1.0) * (J - 2.0)) * drive;
            r.lambda_corrected = r.lambda * adce_correction_factor(params);
            break;
        }
    }
    return r;
}

double exact_resonance(const SystemParams& params, const JointSpace& space, Regime regime, int J) {
    params.validate();
    const auto [upper, lower] = regime_transition(regime, J);
    if (upper.second > space.n_max() || lower.second < 0 || lower.second > space.n_max()) {
        throw ConfigError("transition lies outside the truncated space");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(undriven_hamiltonian(params, space));
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed");
    auto closest = [&](std::pair<Atom, int> bare) {
        const Index row = space.index(bare.first, bare.second);
        Index best = 0;
        solver.eigenvectors().row(row).cwiseAbs2().maxCoeff(&best);
        return solver.eigenvalues()(best);
    };
    return std::abs(closest(upper) - closest(lower));
}

double lz_probability(double lambda_abs, double xi_abs) {
    if (!(xi_abs > 0.0)) throw ConfigError("LZ sweep rate must be > 0 (adiabatic limit gives P -> 1)");
    return -std::expm1(-std::numbers::pi * lambda_abs * lambda_abs / xi_abs);
}

double lz_probability_doubled_rate(double lambda_abs, double xi_abs) { return lz_probability(lambda_abs, 2.0 * xi_abs); }

namespace {

/*
 * Fourth-order Magnus step exp(Omega) for i dc/dt = H(t) c, with H sampled at
 * the two Gauss points.  Omega is anti-Hermitian, so the step is exactly
 * unitary whatever the sweep.
 */
Matrix magnus_step(const std::function<Matrix(double)>& hamiltonian, double t, double h) {
    const double d = std::sqrt(3.0) / 6.0;
    const Matrix h1 = hamiltonian(t + (0.5 - d) * h);
    const Matrix h2 = hamiltonian(t + (0.5 + d) * h);
    // Omega = -i K with K Hermitian
    const Matrix k = 0.5 * h * (h1 + h2) + cplx(0.0, std::sqrt(3.0) / 12.0 * h * h) * (h2 * h1 - h1 * h2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    const Eigen::VectorXcd phase = (-I * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TwoLevelTrajectory effective_two_level_evolution(cplx lambda, const DetuningSchedule& schedule, double t0, double t1,
                                                 bool start_in_first, int records) {
    if (!(t1 > t0)) throw ConfigError("two-level evolution needs t1 > t0");
    records = std::max(1, records);
    const double scale =
        std::abs(lambda) + 0.5 * std::max(std::abs(schedule.effective(t0)), std::abs(schedule.effective(t1)));
    const double span = (t1 - t0) / records;
    const int sub = scale > 0.0 ? std::max(1, static_cast<int>(std::ceil(span * scale / 0.05))) : 1;
    const double h = span / sub;

    auto hamiltonian = [&](double t) {
        const double half = 0.5 * schedule.effective(t);
        Matrix h2(2, 2);
        h2 << half, lambda, std::conj(lambda), -half;
        return h2;
    };
    Vector c(2);
    c << (start_in_first ? 1.0 : 0.0), (start_in_first ? 0.0 : 1.0);
    TwoLevelTrajectory out;
    auto push = [&](double t) {
        out.t.push_back(t);
        out.p_first.push_back(std::norm(c(0)));
        out.p_second.push_back(std::norm(c(1)));
    };
    push(t0);
    for (int r = 0; r < records; ++r) {
        for (int s = 0; s < sub; ++s) c = magnus_step(hamiltonian, t0 + (static_cast<double>(r) * sub + s) * h, h) * c;
        push(t0 + span * (r + 1));
    }
    return out;
}

LadderTrajectory effective_dce_ladder(const SystemParams& params, double epsilon, double phi, int n_levels, double t0,
                                      double t1, const LadderOptions& options) {
    params.validate();
    if (n_levels < 2) throw ConfigError("DCE ladder needs at least two levels");
    if (!(t1 > t0)) throw ConfigError("ladder evolution needs t1 > t0");
    const double alpha = options.kerr.value_or(params.kerr());
    const int records = std::max(1, options.records);
    std::vector<cplx> up(n_levels - 1);
    double scale = 0.0;
    for (int k = 0; k + 1 < n_levels; ++k) {
        up[k] = resonance_frequency(params, Regime::dce, 2 * k, epsilon, phi).lambda;
        scale = std::max(scale, std::abs(up[k]));
    }
    const DetuningSchedule sched{options.nu0, options.rate};
    auto diag = [&](int k, double t) {
        const double m = 2.0 * k;
        return 0.5 * sched.effective(t) * m - alpha * m * (m - 2.0);
    };
    for (int k = 0; k < n_levels; ++k) {
        scale = std::max({scale, std::abs(diag(k, t0)), std::abs(diag(k, t1))});
    }
    const double span = (t1 - t0) / records;
    const int sub = scale > 0.0 ? std::max(1, static_cast<int>(std::ceil(span * scale / 0.05))) : 1;
    const double h = span / sub;

    auto hamiltonian = [&](double t) {
        Matrix hm = Matrix::Zero(n_levels, n_levels);
        for (int k = 0; k < n_levels; ++k) {
            hm(k, k) = diag(k, t);
            if (k + 1 < n_levels) {
                hm(k + 1, k) = up[k];
                hm(k, k + 1) = std::conj(up[k]);
            }
        }
        return hm;
    };
    Vector c = Vector::Zero(n_levels);
    c(0) = 1.0;
    LadderTrajectory out;
    auto push = [&](double t) {
        out.t.push_back(t);
        std::vector<double> p(n_levels);
        double n = 0.0;
        for (int k = 0; k < n_levels; ++k) {
            p[k] = std::norm(c(k));
            n += 2.0 * k * p[k];
        }
        out.populations.push_back(std::move(p));
        out.mean_photons.push_back(n);
    };
    push(t0);
    for (int r = 0; r < records; ++r) {
        for (int s = 0; s < sub; ++s) c = magnus_step(hamiltonian, t0 + (static_cast<double>(r) * sub + s) * h, h) * c;
        push(t0 + span * (r + 1));
    }
    return out;
}

std::pair<double, double> adce_thermal_closed_form(double rho_upper0, double rho_lower0, double lambda_abs, double t) {
    const double c2 = std::pow(std::cos(lambda_abs * t), 2);
    const double s2 = 1.0 - c2;
    return {rho_upper0 * c2 + rho_lower0 * s2, rho_lower0 * c2 + rho_upper0 * s2};
}

double jc_low_frequency_work(const SystemParams& params, double epsilon, double eta, double phi, int branch, int n,
                             double t) {
    if (n < 1) throw ConfigError("JC doublet index n must be >= 1");
    const double th = mixing_angle(params, n, 0.0);
    return (branch > 0 ? 0.5 : -0.5) * epsilon * std::cos(2.0 * th) * (std::sin(eta * t + phi) - std::sin(phi));
}

QuantumState jc_eigenstate(const JointSpace& space, const SystemParams& params, int n, int branch) {
    if (n < 1 || n > space.n_max()) throw ConfigError("JC doublet index out of range");
    const double th = mixing_angle(params, n, 0.0);
    const Vector g = space.basis_vector(Atom::ground, n);
    const Vector e = space.basis_vector(Atom::excited, n - 1);
    if (branch > 0) return QuantumState::pure(std::sin(th) * g + std::cos(th) * e);
    return QuantumState::pure(std::cos(th) * g - std::sin(th) * e);
}

DressedProjection project_onto_dressed(const QuantumState& state, const DressedSpectrum& spectrum,
                                       const JointSpace& space) {
    if (state.dim() != space.dim()) throw ConfigError("state dimension does not match the space");
    const Index k = static_cast<Index>(spectrum.levels.size()) + 1;
    Matrix V(space.dim(), k);
    for (Index c = 0; c + 1 < k; ++c) V.col(c) = spectrum.levels[c].state;
    V.col(k - 1) = space.basis_vector(Atom::excited, space.n_max());

    auto weights = [&](const Matrix& basis) {
        Eigen::VectorXd w(basis.cols());
        if (state.is_pure()) {
            w = (basis.adjoint() * state.vector()).cwiseAbs2();
        } else {
            w = (basis.adjoint() * state.density() * basis).diagonal().real();
        }
        return w;
    };
    DressedProjection out;
    out.residual = std::abs(1.0 - weights(V).sum());

    Eigen::SelfAdjointEigenSolver<Matrix> gram(V.adjoint() * V);
    if (gram.eigenvalues().minCoeff() <= 1e-12) throw NumericalError("dressed basis is linearly dependent");
    const Matrix inv_sqrt =
        gram.eigenvectors() * gram.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * gram.eigenvectors().adjoint();
    const Eigen::VectorXd w = weights(V * inv_sqrt);
    out.populations.assign(w.data(), w.data() + (k - 1));
    out.unpaired = w(k - 1);
    return out;
}

}  // namespace rabi
