#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rabi/hilbert.hpp"

namespace rabi {

/*
 * Perturbative dressed states of the undriven Rabi Hamiltonian
 *
 *   H0 = omega a^dag a + omega0/2 sigma_z + g (a + a^dag)(sigma_+ + sigma_-).
 *
 * The counter-rotating terms are removed to first order in Lambda = g / D+ by
 *
 *   U = exp[Lambda (a sigma_- - a^dag sigma_+) + xi_U (a^2 - a^dag^2) sigma_z],
 *   xi_U = g Lambda / (2 omega),
 *
 * which leaves a Jaynes-Cummings problem with shifted parameters.  Its
 * doublets |R_{m,+-}> (m >= 1) mix |g,m> and |e,m-1> with angle theta_m;
 * |R_0> = U |g,0>.
 *
 * Labels follow the sign D = sign(D-): R_{m,D} is the level adiabatically
 * connected to |g,m>, R_{m,-D} the one connected to |e,m-1>.
 */

enum class SpectrumMode {
    full,        ///< E_{m,+-} with the square root kept
    dispersive,  ///< E_{m,D} = (omega + d- - d+) m - alpha m^2 + E0 and partner
};

struct DressedLevel {
    int m = 0;       ///< 0 for R_0
    int branch = 0;  ///< +1 / -1 for R_{m,+-}, 0 for R_0
    double energy = 0.0;
    double theta = 0.0;  ///< mixing angle theta_m (0 for R_0)
    Vector state;        ///< joint-basis vector, renormalized after the first-order expansion

    std::string label() const;
};

struct DressedSpectrum {
    std::vector<DressedLevel> levels;  ///< sorted by energy
    double Lambda = 0.0;
    double xi_U = 0.0;
    double detuning_sign = 1.0;
    SpectrumMode mode = SpectrumMode::full;

    /// branch = +1/-1 for R_{m,+-}; use branch = 0 with m = 0 for R_0.
    const DressedLevel& level(int m, int branch) const;
    /// R_{m,D} (sign = +1) or R_{m,-D} (sign = -1) in the D-relative labelling.
    const DressedLevel& relative(int m, int sign) const;
};

/// E0 = -(omega0 + d+)/2.
double ground_energy(const SystemParams& params);
/// E_{m,+-} = omega m - (omega + d+)/2 +- sqrt((D- - 2 d+ m)^2 + 4 g^2 m) / 2.
double doublet_energy(const SystemParams& params, int m, int branch);
/// tan theta_m = (D- - 2 d+ m + sqrt(...)) / (2 g sqrt(m)); pass shift_plus = 0 for the JC angle.
double mixing_angle(const SystemParams& params, int m, double shift_plus);
/// Dispersive energies E_{m,D} (sign = +1) and E_{m,-D} (sign = -1).
double dispersive_energy(const SystemParams& params, int m, int sign);

/// Levels R_0 and R_{m,+-} for 1 <= m <= n_max.  Warns through `warnings` outside the dispersive regime.
DressedSpectrum dressed_spectrum(const SystemParams& params, const JointSpace& space,
                                 SpectrumMode mode = SpectrumMode::full, std::vector<std::string>* warnings = nullptr);

enum class Regime { dce, ajc, jc, adce };

std::string to_string(Regime regime);
/// "dce", "ajc", "jc", "adce" (case-insensitive); throws ConfigError otherwise.
Regime parse_regime(const std::string& text);

enum class ResonanceMode {
    dispersive,   ///< closed forms with the d+-, alpha corrections
    dressed_gap,  ///< gap between the two coupled levels of the full perturbative spectrum
};

struct RegimeResonance {
    Regime regime = Regime::adce;
    int J = 0;            ///< photon index of the upper coupled level (DCE: ladder step m)
    double eta = 0.0;     ///< resonance frequency at nu = 0
    cplx lambda = 0.0;    ///< effective coupling
    std::optional<cplx> lambda_corrected;  ///< ADCE only

    /// lambda_corrected when present and requested, else lambda.
    cplx coupling(bool corrected = true) const;
    /// pi / (2 |coupling|), the first full-transfer time.
    double transfer_time(bool corrected = true) const;
};

/// Transition selected by each regime, as the two bare states it connects (upper photon state first).
std::pair<std::pair<Atom, int>, std::pair<Atom, int>> regime_transition(Regime regime, int J);

/// Throws ConfigError on J outside the regime's range (DCE J >= 0, JC J >= 1, ADCE J >= 3, AJC ignores J).
RegimeResonance resonance_frequency(const SystemParams& params, Regime regime, int J, double epsilon, double phi = 0.0,
                                    ResonanceMode mode = ResonanceMode::dispersive);

/// ((2 omega - D-)/(2 omega + D-)) ((omega + D-)/omega).
double adce_correction_factor(const SystemParams& params);
/// The same factor for D-/omega = p/q, in lowest terms.
std::pair<long long, long long> adce_correction_ratio(long long p, long long q);

/// Transition frequency from dense diagonalization of H0 on `space`: the
/// eigenvalue gap between the eigenvectors with largest overlap on the two
/// bare states of the regime's transition.
double exact_resonance(const SystemParams& params, const JointSpace& space, Regime regime, int J);

/// P = 1 - exp(-pi |lambda|^2 / |xi|).  Throws ConfigError for xi_abs <= 0.
double lz_probability(double lambda_abs, double xi_abs);
/// Variant with the sweep rate doubled, P = 1 - exp(-pi |lambda|^2 / (2 |xi|)).
double lz_probability_doubled_rate(double lambda_abs, double xi_abs);

/// Detuning law nu(t) = nu0 + rate t (so eta(t) = eta_res - nu(t)).
struct DetuningSchedule {
    double nu0 = 0.0;
    double rate = 0.0;
    double nu(double t) const { return nu0 + rate * t; }
    /// nu~(t) = nu(t) + nu_dot(t) t.
    double effective(double t) const { return nu0 + 2.0 * rate * t; }
};

struct TwoLevelTrajectory {
    std::vector<double> t;
    std::vector<double> p_first;   ///< level carrying +nu~/2
    std::vector<double> p_second;  ///< level carrying -nu~/2
};

/*
 * H_f = nu~(t)/2 (|1><1| - |2><2|) + (lambda |1><2| + h.c.) for levels
 * 1 = R_{J,D} and 2 = its partner.  Integrated with exactly unitary
 * fourth-order Magnus steps resolving both |lambda| and nu~.
 */
TwoLevelTrajectory effective_two_level_evolution(cplx lambda, const DetuningSchedule& schedule, double t0, double t1,
                                                 bool start_in_first, int records = 1000);

struct LadderTrajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> populations;  ///< [record][k], level m = 2k
    std::vector<double> mean_photons;              ///< sum_k 2k P_k
};

struct LadderOptions {
    double nu0 = 0.0;
    double rate = 0.0;
    std::optional<double> kerr;  ///< override alpha (e.g. 0 to remove the Kerr term)
    int records = 1000;
};

/// DCE ladder R_0 -> R_{2,D} -> R_{4,D} ... with couplings lambda_m and Kerr alpha m (m - 2), started in R_0.
LadderTrajectory effective_dce_ladder(const SystemParams& params, double epsilon, double phi, int n_levels, double t0,
                                      double t1, const LadderOptions& options = {});

/// Populations of R_{J,D} and R_{J-2,-D} at time t for zero initial coherence between them.
std::pair<double, double> adce_thermal_closed_form(double rho_upper0, double rho_lower0, double lambda_abs, double t);

/// W = +-(1/2) eps cos(2 theta_n) [sin(eta t + phi) - sin(phi)] for the JC eigenstate |phi_{n,+-}>.
double jc_low_frequency_work(const SystemParams& params, double epsilon, double eta, double phi, int branch, int n,
                             double t);
/// |phi_{n,+}> = sin theta |g,n> + cos theta |e,n-1>, |phi_{n,->} = cos theta |g,n> - sin theta |e,n-1> (JC angle).
QuantumState jc_eigenstate(const JointSpace& space, const SystemParams& params, int n, int branch);

struct DressedProjection {
    std::vector<double> populations;  ///< per spectrum level, same order
    double unpaired = 0.0;            ///< weight on |e,n_max>, which has no partner in the truncated space
    double residual = 0.0;            ///< |1 - sum of raw (non-orthogonalized) overlaps|
};

/// Populations on the dressed basis after Loewdin orthonormalization; sums to 1 with the unpaired weight.
DressedProjection project_onto_dressed(const QuantumState& state, const DressedSpectrum& spectrum,
                                       const JointSpace& space);

}  // namespace rabi
