#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rabi/error.hpp"
#include "rabi/runner.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_audit = 3;

// "bundled:<name>" selects a scenario compiled into the binary.
rabi::Scenario load(const std::string& ref) {
    const std::string prefix = "bundled:";
    if (ref.rfind(prefix, 0) == 0) return rabi::bundled_scenario(ref.substr(prefix.size()));
    return rabi::load_scenario(ref);
}

void print_scenario(const rabi::Scenario& sc) {
    std::cout << sc.name << " (" << sc.origin << ")\n";
    std::cout << "  params_hash " << rabi::params_hash(sc) << "\n";
    std::cout << "  tau " << sc.tau << "  t_end " << sc.span.t1 << "\n";
    for (const std::string& n : sc.notes) std::cout << "  note: " << n << "\n";
    for (const std::string& w : sc.warnings) std::cout << "  warning: " << w << "\n";
}

int report(const std::vector<rabi::BatchResult>& results) {
    int code = exit_ok;
    for (const rabi::BatchResult& r : results) {
        if (r.ok) {
            std::cout << "ok     " << r.name;
            for (const auto& f : r.files) std::cout << "  " << f.string();
            std::cout << "\n";
        } else {
            std::cerr << "failed " << r.name << ": " << r.message << "\n";
            if (code == exit_ok || r.exit_code == exit_audit) code = r.exit_code;
        }
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent quantum Rabi model: work extraction by parametric modulation"};
    app.set_version_flag("--version", rabi::code_version());
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string out_dir = "out";
    int jobs = 1;
    auto* run = app.add_subcommand("run", "Propagate scenarios and write CSV trajectories");
    run->add_option("--config", configs, "Scenario file, or bundled:<name>; repeatable")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--jobs", jobs, "Parallel scenarios")->check(CLI::PositiveNumber);

    std::string res_config;
    auto* res = app.add_subcommand("resonances", "Tabulate resonance frequencies and transfer times");
    res->add_option("--config", res_config, "Scenario file, or bundled:<name>")->required();

    std::string selector = "all";
    std::string fig_out = "figures";
    int fig_jobs = 1;
    auto* fig = app.add_subcommand("figures", "Run the scenarios behind a figure");
    fig->add_option("--select", selector, "fig1, fig2, fig3 or all")
        ->check(CLI::IsMember({"fig1", "fig2", "fig3", "all"}));
    fig->add_option("--out", fig_out, "Output directory");
    fig->add_option("--jobs", fig_jobs, "Parallel scenarios")->check(CLI::PositiveNumber);

    std::string val_config;
    auto* val = app.add_subcommand("validate", "Parse and resolve a scenario without running it");
    val->add_option("--config", val_config, "Scenario file, or bundled:<name>")->required();

    auto* list = app.add_subcommand("list", "List bundled scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*run) {
            std::vector<rabi::Scenario> scenarios;
            for (const std::string& c : configs) {
                scenarios.push_back(load(c));
                for (const std::string& w : scenarios.back().warnings) {
                    std::cerr << "warning: " << scenarios.back().name << ": " << w << "\n";
                }
            }
            return report(rabi::run_batch(scenarios, out_dir, jobs));
        }
        if (*res) {
            const rabi::Scenario sc = load(res_config);
            const double eps = sc.modulation.tones().empty() ? 0.0 : sc.modulation.tones().front().epsilon;
            const auto rows = rabi::resonance_table(sc.params, eps, 0.0, sc.n_max);
            std::cout << "# g/omega = " << sc.params.g << ", omega0/omega = " << sc.params.omega0
                      << ", eps/omega = " << eps << ", tau*omega = " << sc.tau << "\n";
            std::cout << rabi::format_resonance_table(rows, sc.tau);
            return exit_ok;
        }
        if (*fig) {
            std::cout << "selection " << selector << ":";
            for (const std::string& n : rabi::figure_scenarios(selector)) std::cout << " " << n;
            std::cout << "\n";
            return report(rabi::reproduce_figures(selector, fig_out, fig_jobs));
        }
        if (*val) {
            print_scenario(load(val_config));
            return exit_ok;
        }
        if (*list) {
            for (const std::string& n : rabi::bundled_scenario_names()) std::cout << n << "\n";
            return exit_ok;
        }
    } catch (const rabi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const rabi::TruncationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const rabi::AuditError& e) {
        std::cerr << "audit failure: " << e.what() << "\n";
        return exit_audit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_ok;
}
