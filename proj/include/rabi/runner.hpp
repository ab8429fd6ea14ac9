#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rabi/dressed.hpp"
#include "rabi/hilbert.hpp"
#include "rabi/modulation.hpp"
#include "rabi/propagate.hpp"
#include "rabi/thermo.hpp"

namespace rabi {

/// Semantic version written into every CSV header.
std::string code_version();

struct InitialSpec {
    enum class Kind { fock, thermal, jc_eigenstate };
    Kind kind = Kind::fock;
    Atom atom = Atom::ground;  ///< fock only
    int n = 0;                 ///< fock photon number or JC doublet index
    double n_bar = 0.0;        ///< thermal only
    bool auto_renormalize = false;
    int branch = -1;  ///< JC eigenstate branch
};

/// A fully resolved run: omega = 1, absolute rates and times.
struct Scenario {
    std::string name;
    std::string description;
    std::string origin;  ///< file path or "bundled:<name>"

    SystemParams params;
    int n_max = 10;
    InitialSpec initial;
    ModulationSpec modulation;
    bool dissipative = false;
    LindbladParams lindblad;

    /// tau = 2 D+ / (g eps^(1)), from the first tone; infinite without drive.
    double tau = 0.0;
    TimeSpan span;
    IntegratorConfig integrator;
    std::string csv_name;

    std::vector<std::string> notes;     ///< resolved choices recorded in the CSV metadata
    std::vector<std::string> warnings;  ///< physics-regime flags
};

/*
 * Scenario files (TOML subset, see rabi/config.hpp):
 *
 *   name = "fig1d_adce"
 *   [system]      g_over_omega, detuning_over_g, n_max
 *   [initial]     state = "fock" (n, atom) | "thermal" (n_bar, auto_renormalize) | "jc" (n, branch)
 *   [[tone]]      epsilon_over_omega0, phase, eta_over_omega,
 *                 tune = { regime, J, tolerance }           snap eta to the exact dressed gap
 *   [tone.chirp]  lambda_over_omega, offset_in_lambda, slope_in_lambda2
 *                 or eta0_over_omega, slope_over_omega2; optional t_start_over_tau / t_end_over_tau
 *   [evolution]   mode = "unitary" | "lindblad"; kappa_over_g, gamma_over_g, n_cavity or kT_over_omega
 *   [time]        t_end_over_tau or t_end_over_omega; records; zoom_over_tau = [[a, b], ...]; samples_per_period
 *   [integrator]  method = "rk4" | "dopri5" (default dopri5 unitary, rk4 lindblad);
 *                 steps_per_period; max_step; rtol; atol; truncation_limit
 *   [output]      csv
 */
Scenario parse_scenario(const std::string& text, const std::string& origin);
Scenario load_scenario(const std::filesystem::path& path);

/// Names of the scenarios compiled into the binary (the files under scenarios/).
std::vector<std::string> bundled_scenario_names();
Scenario bundled_scenario(const std::string& name);
std::string bundled_scenario_text(const std::string& name);

QuantumState initial_state(const Scenario& scenario, const JointSpace& space);

/// FNV-1a hash over the resolved physical parameters, as 16 hex digits.
std::string params_hash(const Scenario& scenario);

/// Propagate without I/O; audits are applied.
Trajectory simulate(const Scenario& scenario);

struct RunOutput {
    Trajectory trajectory;
    std::vector<std::filesystem::path> files;
    FirstLawReport first_law;
};

/*
 * Propagate, audit and write <out>/<csv> (plus <stem>_zoom.csv when zoom
 * windows are set).  Throws AuditError when the first law or trace audit
 * fails; truncation failures surface from the propagator as AuditError.
 */
RunOutput run_scenario(const Scenario& scenario, const std::optional<std::filesystem::path>& out_dir);

/// Header comments, column row and one line per sample.
void write_csv(std::ostream& out, const Scenario& scenario, const std::vector<Sample>& samples);

struct BatchResult {
    std::string name;
    bool ok = false;
    int exit_code = 0;  ///< 0 ok, 2 config, 3 audit, 1 other
    std::string message;
    std::vector<std::filesystem::path> files;
};

/// Runs scenarios on up to `jobs` threads; each run is independent and single-threaded.
std::vector<BatchResult> run_batch(const std::vector<Scenario>& scenarios, const std::filesystem::path& out_dir,
                                   int jobs);

struct ResonanceRow {
    Regime regime = Regime::adce;
    int J = 0;
    double eta = 0.0;
    double eta_dressed_gap = 0.0;
    std::optional<double> eta_exact;
    double lambda_abs = 0.0;
    double transfer_time = 0.0;  ///< pi / (2 |lambda|)
};

/// DCE, AJC, JC (J = 1..4) and ADCE (J = 3..5) rows; eta_exact filled when n_max > 0.
std::vector<ResonanceRow> resonance_table(const SystemParams& params, double epsilon, double phi = 0.0,
                                          int n_max = 0);
std::string format_resonance_table(const std::vector<ResonanceRow>& rows, double tau);

/// Bundled scenario names reproducing a figure: "fig1", "fig2", "fig3" or "all".
std::vector<std::string> figure_scenarios(const std::string& selector);
std::vector<BatchResult> reproduce_figures(const std::string& selector, const std::filesystem::path& out_dir,
                                           int jobs = 1);

}  // namespace rabi
