#include "rabi/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "rabi/config.hpp"
#include "rabi/error.hpp"

#ifndef RABI_VERSION
#define RABI_VERSION "0.0.0"
#endif

namespace rabi {

namespace detail {
// generated from scenarios/*.toml at build time
const std::vector<std::pair<std::string, std::string>>& embedded_scenarios();
}  // namespace detail

std::string code_version() { return RABI_VERSION; }

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_value(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

struct ToneSpec {
    double epsilon = 0.0;
    double phase = 0.0;
    double eta = 0.0;
    std::optional<Regime> tune_regime;
    int tune_J = 0;
    double tune_tolerance = 5e-4;
    bool chirp = false;
    double chirp_offset = 0.0;  // eta0 = eta + chirp_offset
    double chirp_slope = 0.0;
    std::optional<std::pair<double, double>> window_over_tau;
};

ToneSpec read_tone(const config::Section& s, const SystemParams& params) {
    s.only({"epsilon_over_omega0", "phase", "eta_over_omega", "tune", "chirp"});
    ToneSpec t;
    t.epsilon = s.number("epsilon_over_omega0") * params.omega0;
    if (t.epsilon < 0.0) throw ConfigError("field '" + s.field("epsilon_over_omega0") + "': must be >= 0");
    t.phase = s.number("phase", 0.0);
    const auto chirp = s.optional_table("chirp");
    if (chirp && chirp->has("eta0_over_omega")) {
        if (s.has("eta_over_omega")) {
            throw ConfigError("field '" + s.field("eta_over_omega") + "': give either eta_over_omega or chirp.eta0_over_omega");
        }
        t.eta = chirp->number("eta0_over_omega");
    } else {
        t.eta = s.number("eta_over_omega");
    }
    if (!(t.eta > 0.0)) throw ConfigError("field '" + s.field("eta_over_omega") + "': must be > 0");
    if (const auto tune = s.optional_table("tune")) {
        tune->only({"regime", "J", "tolerance"});
        t.tune_regime = parse_regime(tune->string("regime"));
        t.tune_J = static_cast<int>(tune->integer("J", 0));
        t.tune_tolerance = tune->number("tolerance", t.tune_tolerance);
    }
    if (chirp) {
        chirp->only({"lambda_over_omega", "offset_in_lambda", "slope_in_lambda2", "eta0_over_omega",
                     "slope_over_omega2", "t_start_over_tau", "t_end_over_tau"});
        t.chirp = true;
        if (chirp->has("lambda_over_omega")) {
            const double lambda = chirp->number("lambda_over_omega");
            if (!(lambda > 0.0)) throw ConfigError("field '" + chirp->field("lambda_over_omega") + "': must be > 0");
            t.chirp_offset = chirp->number("offset_in_lambda", 0.0) * lambda;
            t.chirp_slope = chirp->number("slope_in_lambda2") * lambda * lambda;
        } else {
            t.chirp_slope = chirp->number("slope_over_omega2");
        }
        const auto a = chirp->optional_number("t_start_over_tau");
        const auto b = chirp->optional_number("t_end_over_tau");
        if (a.has_value() != b.has_value()) {
            throw ConfigError("field '" + chirp->field("t_start_over_tau") + "': chirp window needs both ends");
        }
        if (a) t.window_over_tau = std::make_pair(*a, *b);
    }
    return t;
}

std::string canonical_string(const Scenario& sc) {
    std::ostringstream c;
    c << "omega=" << fmt_double(sc.params.omega) << ";omega0=" << fmt_double(sc.params.omega0)
      << ";g=" << fmt_double(sc.params.g) << ";n_max=" << sc.n_max;
    c << ";initial=" << static_cast<int>(sc.initial.kind) << "," << static_cast<int>(sc.initial.atom) << ","
      << sc.initial.n << "," << fmt_double(sc.initial.n_bar) << "," << sc.initial.branch << ","
      << sc.initial.auto_renormalize;
    for (const Tone& t : sc.modulation.tones()) {
        c << ";tone=" << fmt_double(t.epsilon) << "," << fmt_double(t.phase) << ","
          << fmt_double(t.schedule.eta0()) << "," << fmt_double(t.schedule.slope());
        if (const auto& w = t.schedule.window()) c << ",[" << fmt_double(w->t_start) << "," << fmt_double(w->t_end) << "]";
    }
    if (sc.dissipative) {
        c << ";kappa=" << fmt_double(sc.lindblad.kappa) << ";gamma=" << fmt_double(sc.lindblad.gamma)
          << ";n_c=" << fmt_double(sc.lindblad.n_cavity) << ";n_a=" << fmt_double(sc.lindblad.n_atom);
    }
    const IntegratorConfig& ic = sc.integrator;
    c << ";span=" << fmt_double(sc.span.t0) << "," << fmt_double(sc.span.t1) << ";method=" << static_cast<int>(ic.method)
      << ";max_step=" << fmt_double(ic.max_step) << ";spp=" << ic.steps_per_period << ";rtol=" << fmt_double(ic.rtol)
      << ";atol=" << fmt_double(ic.atol) << ";records=" << ic.sampling.records
      << ";dense_spp=" << ic.sampling.samples_per_period;
    for (const TimeSpan& w : ic.sampling.dense_windows) c << ";zoom=" << fmt_double(w.t0) << "," << fmt_double(w.t1);
    return c.str();
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    const config::Table root_table = config::parse(text, origin);
    const config::Section root(root_table, "");
    root.only({"name", "description", "system", "initial", "tone", "evolution", "time", "integrator", "output"});

    Scenario sc;
    sc.origin = origin;
    sc.name = root.string("name");
    sc.description = root.string("description", "");

    const config::Section sys = root.table("system");
    sys.only({"g_over_omega", "detuning_over_g", "n_max"});
    const double g_ratio = sys.number("g_over_omega");
    const double det_ratio = sys.number("detuning_over_g");
    if (!(g_ratio > 0.0)) throw ConfigError("field 'system.g_over_omega': must be > 0");
    if (det_ratio == 0.0) throw ConfigError("field 'system.detuning_over_g': must be nonzero");
    sc.params = SystemParams::from_ratios(g_ratio, det_ratio);
    if (!(sc.params.omega0 > 0.0)) throw ConfigError("field 'system.detuning_over_g': gives omega0 <= 0");
    sc.params.validate();
    sc.n_max = static_cast<int>(sys.integer("n_max", 10));
    if (sc.n_max < 3) throw ConfigError("field 'system.n_max': must be >= 3");

    const config::Section ini = root.table("initial");
    const std::string kind = ini.string("state");
    if (kind == "fock") {
        ini.only({"state", "n", "atom"});
        sc.initial.kind = InitialSpec::Kind::fock;
        sc.initial.n = static_cast<int>(ini.integer("n"));
        const std::string atom = ini.string("atom", "g");
        if (atom != "g" && atom != "e") throw ConfigError("field 'initial.atom': expected \"g\" or \"e\"");
        sc.initial.atom = atom == "g" ? Atom::ground : Atom::excited;
        if (sc.initial.n < 0 || sc.initial.n > sc.n_max) throw ConfigError("field 'initial.n': outside [0, n_max]");
    } else if (kind == "thermal") {
        ini.only({"state", "n_bar", "auto_renormalize"});
        sc.initial.kind = InitialSpec::Kind::thermal;
        sc.initial.n_bar = ini.number("n_bar");
        sc.initial.auto_renormalize = ini.boolean("auto_renormalize", false);
        if (sc.initial.n_bar < 0.0) throw ConfigError("field 'initial.n_bar': must be >= 0");
    } else if (kind == "jc") {
        ini.only({"state", "n", "branch"});
        sc.initial.kind = InitialSpec::Kind::jc_eigenstate;
        sc.initial.n = static_cast<int>(ini.integer("n"));
        const std::string branch = ini.string("branch");
        if (branch != "+" && branch != "-") throw ConfigError("field 'initial.branch': expected \"+\" or \"-\"");
        sc.initial.branch = branch == "+" ? 1 : -1;
        if (sc.initial.n < 1 || sc.initial.n > sc.n_max) throw ConfigError("field 'initial.n': outside [1, n_max]");
    } else if (kind == "coherent" || kind == "squeezed") {
        throw ConfigError("field 'initial.state': '" + kind + "' states are reserved but not supported");
    } else {
        throw ConfigError("field 'initial.state': expected \"fock\", \"thermal\" or \"jc\"");
    }

    // tones; tau from the first tone's amplitude
    std::vector<ToneSpec> specs;
    for (const config::Section& t : root.tables("tone")) specs.push_back(read_tone(t, sc.params));
    sc.tau = specs.empty() ? std::numeric_limits<double>::infinity() : drive_timescale(sc.params, specs[0].epsilon);
    if (specs.size() > 1) sc.notes.push_back("tau defined from the first tone's amplitude");

    std::vector<Tone> tones;
    int max_J = sc.initial.kind == InitialSpec::Kind::thermal ? static_cast<int>(std::ceil(sc.initial.n_bar))
                                                               : sc.initial.n;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        ToneSpec& ts = specs[k];
        if (ts.tune_regime) {
            const JointSpace space(sc.n_max);
            const double exact = exact_resonance(sc.params, space, *ts.tune_regime, ts.tune_J);
            if (std::abs(exact - ts.eta) > ts.tune_tolerance) {
                std::ostringstream msg;
                msg << "field 'tone[" << k << "].tune': exact " << to_string(*ts.tune_regime) << " resonance "
                    << exact << " is more than " << ts.tune_tolerance << " from eta_over_omega = " << ts.eta;
                throw ConfigError(msg.str());
            }
            std::ostringstream note;
            note.precision(10);
            note << "tone " << k << ": eta " << ts.eta << " tuned to exact " << to_string(*ts.tune_regime)
                 << " J=" << ts.tune_J << " gap " << exact;
            sc.notes.push_back(note.str());
            ts.eta = exact;
            max_J = std::max(max_J, ts.tune_J);
        }
        FrequencySchedule schedule = FrequencySchedule::constant(ts.eta);
        if (ts.chirp) {
            std::optional<ChirpWindow> window;
            if (ts.window_over_tau) {
                if (!std::isfinite(sc.tau)) throw ConfigError("chirp window in tau units needs a nonzero amplitude");
                window = ChirpWindow{ts.window_over_tau->first * sc.tau, ts.window_over_tau->second * sc.tau};
            }
            schedule = FrequencySchedule::linear_chirp(ts.eta + ts.chirp_offset, ts.chirp_slope, window);
        }
        tones.push_back(Tone{ts.epsilon, ts.phase, schedule});
    }
    sc.modulation = ModulationSpec(sc.params.omega0, tones);
    for (const std::string& w : sc.modulation.regime_warnings(sc.params.g)) sc.warnings.push_back(w);
    if (!sc.params.dispersive(std::max(1, max_J))) {
        sc.warnings.push_back("outside the dispersive regime for the driven transition (g sqrt(n) >= |D-|/2)");
    }

    if (const auto ev = root.optional_table("evolution")) {
        ev->only({"mode", "kappa_over_g", "gamma_over_g", "n_cavity", "kT_over_omega"});
        const std::string mode = ev->string("mode", "unitary");
        if (mode == "lindblad") {
            sc.dissipative = true;
            const double kappa = ev->number("kappa_over_g") * sc.params.g;
            const double gamma = ev->number("gamma_over_g") * sc.params.g;
            if (kappa < 0.0 || gamma < 0.0) throw ConfigError("field 'evolution': decay rates must be >= 0");
            if (ev->has("n_cavity") && ev->has("kT_over_omega")) {
                throw ConfigError("field 'evolution.kT_over_omega': give either n_cavity or kT_over_omega");
            }
            if (ev->has("kT_over_omega")) {
                const double kT = ev->number("kT_over_omega") * sc.params.omega;
                if (!(kT > 0.0)) throw ConfigError("field 'evolution.kT_over_omega': must be > 0");
                sc.lindblad = LindbladParams::from_temperature(kappa, gamma, kT, sc.params);
            } else {
                const double nc = ev->number("n_cavity", 0.0);
                if (nc < 0.0) throw ConfigError("field 'evolution.n_cavity': must be >= 0");
                sc.lindblad = LindbladParams::from_cavity_occupation(kappa, gamma, nc, sc.params);
            }
            std::ostringstream note;
            note.precision(6);
            note << "reservoir kT/omega = " << sc.lindblad.reservoir_kT.value_or(0.0)
                 << ", n_c = " << sc.lindblad.n_cavity << ", n_a = " << sc.lindblad.n_atom;
            sc.notes.push_back(note.str());
        } else if (mode != "unitary") {
            throw ConfigError("field 'evolution.mode': expected \"unitary\" or \"lindblad\"");
        } else {
            ev->only({"mode"});
        }
    }

    const config::Section tm = root.table("time");
    tm.only({"t_end_over_tau", "t_end_over_omega", "records", "zoom_over_tau", "samples_per_period"});
    if (tm.has("t_end_over_tau") == tm.has("t_end_over_omega")) {
        throw ConfigError("field 'time.t_end_over_tau': give exactly one of t_end_over_tau or t_end_over_omega");
    }
    double t_end = 0.0;
    if (tm.has("t_end_over_tau")) {
        if (!std::isfinite(sc.tau)) throw ConfigError("field 'time.t_end_over_tau': tau is undefined without a drive");
        t_end = tm.number("t_end_over_tau") * sc.tau;
    } else {
        t_end = tm.number("t_end_over_omega");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("field 'time': end time must be finite and > 0");
    sc.span = {0.0, t_end};
    sc.integrator.sampling.records = static_cast<int>(tm.integer("records", 2000));
    if (sc.integrator.sampling.records < 1) throw ConfigError("field 'time.records': must be >= 1");
    sc.integrator.sampling.samples_per_period = static_cast<int>(tm.integer("samples_per_period", 50));
    if (tm.has("zoom_over_tau")) {
        if (!std::isfinite(sc.tau)) throw ConfigError("field 'time.zoom_over_tau': tau is undefined without a drive");
        for (const auto& w : tm.number_pairs("zoom_over_tau")) {
            if (!(w[1] > w[0])) throw ConfigError("field 'time.zoom_over_tau': windows need end > start");
            sc.integrator.sampling.dense_windows.push_back({w[0] * sc.tau, w[1] * sc.tau});
        }
    }

    // unitary runs default to the adaptive scheme: fixed-step RK4 leaks norm on long pure-state runs,
    // while for the Lindblad generator its trace is exact and the fixed step is cheaper
    sc.integrator.method = sc.dissipative ? IntegrationMethod::rk4 : IntegrationMethod::dopri5;
    if (const auto in = root.optional_table("integrator")) {
        in->only({"method", "steps_per_period", "max_step", "rtol", "atol", "truncation_limit"});
        const std::string method = in->string("method", sc.dissipative ? "rk4" : "dopri5");
        if (method == "rk4") {
            sc.integrator.method = IntegrationMethod::rk4;
        } else if (method == "dopri5") {
            sc.integrator.method = IntegrationMethod::dopri5;
        } else {
            throw ConfigError("field 'integrator.method': expected \"rk4\" or \"dopri5\"");
        }
        sc.integrator.steps_per_period = static_cast<int>(in->integer("steps_per_period", 50));
        if (sc.integrator.steps_per_period < 25) throw ConfigError("field 'integrator.steps_per_period': must be >= 25");
        sc.integrator.max_step = in->number("max_step", 0.0);
        sc.integrator.rtol = in->number("rtol", sc.integrator.rtol);
        sc.integrator.atol = in->number("atol", sc.integrator.atol);
        sc.integrator.truncation_limit = in->number("truncation_limit", sc.integrator.truncation_limit);
    }
    const double drive = sc.modulation.max_frequency(sc.span.t0, sc.span.t1);
    if (sc.integrator.max_step > 0.0 && drive > 0.0 &&
        sc.integrator.max_step > 2.0 * std::numbers::pi / (25.0 * drive)) {
        throw ConfigError("field 'integrator.max_step': exceeds 2 pi / (25 eta_max)");
    }

    sc.csv_name = sc.name + ".csv";
    if (const auto out = root.optional_table("output")) {
        out->only({"csv"});
        sc.csv_name = out->string("csv", sc.csv_name);
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::vector<std::string> bundled_scenario_names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : detail::embedded_scenarios()) out.push_back(name);
    return out;
}

std::string bundled_scenario_text(const std::string& name) {
    for (const auto& [n, text] : detail::embedded_scenarios()) {
        if (n == name) return text;
    }
    throw ConfigError("no bundled scenario named '" + name + "'");
}

Scenario bundled_scenario(const std::string& name) {
    return parse_scenario(bundled_scenario_text(name), "bundled:" + name);
}

QuantumState initial_state(const Scenario& sc, const JointSpace& space) {
    switch (sc.initial.kind) {
        case InitialSpec::Kind::fock: return fock_state(space, sc.initial.atom, sc.initial.n);
        case InitialSpec::Kind::thermal: {
            ThermalOptions opts;
            opts.auto_renormalize = sc.initial.auto_renormalize;
            return thermal_ground_state(space, sc.initial.n_bar, opts);
        }
        case InitialSpec::Kind::jc_eigenstate: return jc_eigenstate(space, sc.params, sc.initial.n, sc.initial.branch);
    }
    throw ConfigError("unknown initial state");
}

std::string params_hash(const Scenario& sc) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical_string(sc)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

Trajectory simulate(const Scenario& sc) {
    const JointSpace space(sc.n_max);
    const QuantumState psi0 = initial_state(sc, space);
    Trajectory traj = sc.dissipative
                          ? evolve_lindblad(psi0, space, sc.params, sc.modulation, sc.lindblad, sc.span, sc.integrator)
                          : evolve_unitary(psi0, space, sc.params, sc.modulation, sc.span, sc.integrator);
    traj.metadata.scenario = sc.name;
    traj.metadata.params_hash = params_hash(sc);
    traj.metadata.tau = sc.tau;
    traj.metadata.notes = sc.notes;
    return traj;
}

RunOutput run_scenario(const Scenario& sc, const std::optional<std::filesystem::path>& out_dir) {
    RunOutput out;
    try {
        out.trajectory = simulate(sc);
    } catch (const AuditError& e) {
        throw AuditError("scenario '" + sc.name + "': " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("scenario '" + sc.name + "': " + e.what());
    }
    const Trajectory& traj = out.trajectory;
    out.first_law = first_law_check(traj, 1e-4);

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        const std::filesystem::path main = *out_dir / sc.csv_name;
        std::ofstream f(main);
        if (!f) throw ConfigError("cannot write '" + main.string() + "'");
        write_csv(f, sc, traj.regular());
        out.files.push_back(main);
        if (!sc.integrator.sampling.dense_windows.empty()) {
            std::vector<Sample> zoom;
            std::copy_if(traj.samples.begin(), traj.samples.end(), std::back_inserter(zoom),
                         [](const Sample& s) { return s.dense; });
            const std::filesystem::path zp = *out_dir / (main.stem().string() + "_zoom.csv");
            std::ofstream z(zp);
            if (!z) throw ConfigError("cannot write '" + zp.string() + "'");
            write_csv(z, sc, zoom);
            out.files.push_back(zp);
        }
    }
    if (!out.first_law.ok) {
        std::ostringstream msg;
        msg << "scenario '" << sc.name << "': first-law audit failed, |dU - W - Q| = " << out.first_law.max_residual
            << " at t = " << out.first_law.at_time;
        throw AuditError(msg.str());
    }
    if (traj.max_trace_error > 1e-7) {
        std::ostringstream msg;
        msg << "scenario '" << sc.name << "': trace drifted by " << traj.max_trace_error;
        throw AuditError(msg.str());
    }
    return out;
}

void write_csv(std::ostream& out, const Scenario& sc, const std::vector<Sample>& samples) {
    out << "# scenario: " << sc.name << "\n";
    out << "# params_hash: " << params_hash(sc) << "\n";
    out << "# code_version: " << code_version() << "\n";
    out << "# units: hbar = omega = 1; tau = 2 D+ / (g eps1) = " << fmt_value(sc.tau) << "\n";
    out << "# evolution: " << (sc.dissipative ? "lindblad" : "unitary") << "\n";
    for (const std::string& n : sc.notes) out << "# note: " << n << "\n";
    out << "t_over_tau,t_omega,W_over_homega,Q_over_homega,U_over_homega,N,P_e,sigma_z,top_fock_pop\n";
    const double inv_tau = std::isfinite(sc.tau) ? 1.0 / sc.tau : std::numeric_limits<double>::quiet_NaN();
    for (const Sample& s : samples) {
        out << fmt_value(s.t * inv_tau) << ',' << fmt_value(s.t * sc.params.omega) << ',' << fmt_value(s.work) << ','
            << fmt_value(s.heat) << ',' << fmt_value(s.internal_energy) << ',' << fmt_value(s.excitations) << ','
            << fmt_value(s.excited_population) << ',' << fmt_value(s.sigma_z) << ','
            << fmt_value(s.top_fock_population) << '\n';
    }
}

std::vector<BatchResult> run_batch(const std::vector<Scenario>& scenarios, const std::filesystem::path& out_dir,
                                   int jobs) {
    std::vector<BatchResult> results(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next++;
            if (i >= scenarios.size()) return;
            BatchResult& r = results[i];
            r.name = scenarios[i].name;
            try {
                r.files = run_scenario(scenarios[i], out_dir).files;
                r.ok = true;
            } catch (const ConfigError& e) {
                r.exit_code = 2;
                r.message = e.what();
            } catch (const TruncationError& e) {
                r.exit_code = 2;
                r.message = e.what();
            } catch (const AuditError& e) {
                r.exit_code = 3;
                r.message = e.what();
            } catch (const std::exception& e) {
                r.exit_code = 1;
                r.message = e.what();
            }
        }
    };
    const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, scenarios.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    return results;
}

std::vector<ResonanceRow> resonance_table(const SystemParams& params, double epsilon, double phi, int n_max) {
    std::vector<std::pair<Regime, int>> entries{{Regime::dce, 0}, {Regime::ajc, 1}};
    for (int J = 1; J <= 4; ++J) entries.emplace_back(Regime::jc, J);
    for (int J = 3; J <= 5; ++J) entries.emplace_back(Regime::adce, J);
    std::optional<JointSpace> space;
    if (n_max > 0 && params.g > 0.0) space.emplace(n_max);
    std::vector<ResonanceRow> rows;
    for (const auto& [regime, J] : entries) {
        const RegimeResonance r = resonance_frequency(params, regime, J, epsilon, phi, ResonanceMode::dispersive);
        ResonanceRow row;
        row.regime = regime;
        row.J = J;
        row.eta = r.eta;
        row.eta_dressed_gap = resonance_frequency(params, regime, J, epsilon, phi, ResonanceMode::dressed_gap).eta;
        row.lambda_abs = std::abs(r.coupling());
        row.transfer_time = r.transfer_time();
        const auto levels = regime_transition(regime, J);
        if (space && std::max(levels.first.second, levels.second.second) <= n_max) {
            row.eta_exact = exact_resonance(params, *space, regime, J);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string format_resonance_table(const std::vector<ResonanceRow>& rows, double tau) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-6s %3s %12s %12s %12s %12s %14s %10s\n", "regime", "J", "eta/omega",
                  "eta_gap", "eta_exact", "|lambda|", "tau_m*omega", "tau_m/tau");
    out << buf;
    for (const ResonanceRow& r : rows) {
        char exact_buf[32] = "-";
        if (r.eta_exact) std::snprintf(exact_buf, sizeof exact_buf, "%.7f", *r.eta_exact);
        const std::string exact = exact_buf;
        if (r.lambda_abs > 0.0) {
            std::snprintf(buf, sizeof buf, "%-6s %3d %12.7f %12.7f %12s %12.4e %14.6g %10.4g\n",
                          to_string(r.regime).c_str(), r.J, r.eta, r.eta_dressed_gap, exact.c_str(), r.lambda_abs,
                          r.transfer_time, std::isfinite(tau) ? r.transfer_time / tau : 0.0);
        } else {
            std::snprintf(buf, sizeof buf, "%-6s %3d %12.7f %12.7f %12s %12.4e %14s %10s\n",
                          to_string(r.regime).c_str(), r.J, r.eta, r.eta_dressed_gap, exact.c_str(), 0.0,
                          "no transfer", "-");
        }
        out << buf;
    }
    return out.str();
}

std::vector<std::string> figure_scenarios(const std::string& selector) {
    static const std::map<std::string, std::vector<std::string>> figures{
        {"fig1", {"fig1a_dce", "fig1b_ajc", "fig1c_jc", "fig1d_adce"}},
        {"fig2", {"fig2a_eta1", "fig2a_eta2", "fig2a_two_tone", "fig2d_dissipative"}},
        {"fig3", {"fig3_lz", "fig3_lz_dissipative", "fig3c_lz_fast_dissipative"}},
    };
    if (selector == "all") {
        std::vector<std::string> out;
        for (const char* f : {"fig1", "fig2", "fig3"}) {
            const auto& v = figures.at(f);
            out.insert(out.end(), v.begin(), v.end());
        }
        return out;
    }
    const auto it = figures.find(selector);
    if (it == figures.end()) {
        throw ConfigError("unknown figure selector '" + selector + "' (valid: fig1, fig2, fig3, all)");
    }
    return it->second;
}

std::vector<BatchResult> reproduce_figures(const std::string& selector, const std::filesystem::path& out_dir,
                                           int jobs) {
    std::vector<Scenario> scenarios;
    for (const std::string& name : figure_scenarios(selector)) scenarios.push_back(bundled_scenario(name));
    return run_batch(scenarios, out_dir, jobs);
}

}  // namespace rabi
