#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rabi/config.hpp"
#include "rabi/error.hpp"
#include "rabi/runner.hpp"

using namespace rabi;

namespace {

const char* minimal = R"(
name = "mini"
[system]
g_over_omega = 0.05
detuning_over_g = 8.0
n_max = 6
[initial]
state = "fock"
n = 3
[[tone]]
epsilon_over_omega0 = 0.05
eta_over_omega = 2.41824
[time]
t_end_over_omega = 200.0
records = 20
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

std::string config_error(const std::string& text) {
    try {
        parse_scenario(text, "test");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("toml subset") {
    const config::Table t = config::parse(R"(
# comment
a = 1
b = -2.5e-3   # trailing
c = "x\ty"
d = 'raw\n'
e = [1, 2.0,
     3]
f = { k = true, "q w" = [[1, 2], [3, 4]] }
g.h = 1_000
[s]
x = inf
[[arr]]
v = 1
[[arr]]
v = 2
[arr.sub]
w = 3
)");
    const config::Section root(t, "");
    CHECK(root.integer("a") == 1);
    CHECK(root.number("b") == doctest::Approx(-2.5e-3));
    CHECK(root.string("c") == "x\ty");
    CHECK(root.string("d") == "raw\\n");
    CHECK(root.numbers("e") == std::vector<double>{1, 2, 3});
    CHECK(root.table("f").boolean("k", false));
    CHECK(root.table("f").number_pairs("q w").size() == 2);
    CHECK(root.table("g").integer("h") == 1000);
    CHECK(std::isinf(root.table("s").number("x")));
    const auto arr = root.tables("arr");
    REQUIRE(arr.size() == 2);
    CHECK(arr[1].integer("v") == 2);
    CHECK(arr[1].table("sub").integer("w") == 3);
    CHECK_FALSE(arr[0].has("sub"));

    CHECK_THROWS_AS(config::parse("a = 1\na = 2"), ConfigError);
    CHECK_THROWS_AS(config::parse("a = \"open"), ConfigError);
    CHECK_THROWS_AS(config::parse("a = 1979-05-27"), ConfigError);
    CHECK_THROWS_AS(config::parse("[a\nb = 1"), ConfigError);
    try {
        config::parse("x = 1\ny = [1,\n", "f.toml");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("f.toml:") == 0);
    }
}

TEST_CASE("section errors name the field") {
    const config::Table t = config::parse("[s]\nx = \"a\"\ny = 1.5\n");
    const config::Section s = config::Section(t, "").table("s");
    try {
        s.number("x");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("s.x") != std::string::npos);
    }
    CHECK_THROWS_AS(s.integer("y"), ConfigError);
    CHECK_THROWS_AS(s.number("missing"), ConfigError);
    CHECK_THROWS_AS(s.only({"x"}), ConfigError);
}

TEST_CASE("scenario parsing") {
    const Scenario sc = parse_scenario(minimal, "test");
    CHECK(sc.name == "mini");
    CHECK(sc.params.omega0 == doctest::Approx(0.6));
    CHECK(sc.modulation.tones().at(0).epsilon == doctest::Approx(0.03));
    CHECK(sc.tau == doctest::Approx(2 * 1.6 / (0.05 * 0.03)));
    CHECK(sc.integrator.method == IntegrationMethod::dopri5);
    CHECK(sc.csv_name == "mini.csv");

    CHECK(config_error(replace(minimal, "epsilon_over_omega0 = 0.05\n", "")).find("epsilon_over_omega0") !=
          std::string::npos);
    CHECK(config_error(replace(minimal, "n = 3", "n = 7")).find("initial.n") != std::string::npos);
    CHECK(config_error(replace(minimal, "n_max = 6", "n_max = 2")).find("n_max") != std::string::npos);
    CHECK(config_error(replace(minimal, "records = 20", "records = 20\nbogus = 1")).find("bogus") !=
          std::string::npos);
    CHECK(config_error(replace(minimal, "state = \"fock\"", "state = \"coherent\"")).find("initial.state") !=
          std::string::npos);
    CHECK(config_error(replace(minimal, "records = 20", "records = 20\n[integrator]\nsteps_per_period = 10"))
              .find("steps_per_period") != std::string::npos);
    CHECK(config_error(replace(minimal, "t_end_over_omega", "t_end_over_tau = 1.0\nt_end_over_omega")) != "");
    CHECK(config_error(replace(minimal, "eta_over_omega = 2.41824",
                               "eta_over_omega = 2.5\ntune = { regime = \"adce\", J = 3 }"))
              .find("tune") != std::string::npos);
}

TEST_CASE("tuning snaps to the exact gap") {
    const Scenario sc = parse_scenario(
        replace(minimal, "eta_over_omega = 2.41824", "eta_over_omega = 2.41824\ntune = { regime = \"adce\", J = 3 }"),
        "test");
    const double eta = sc.modulation.tones()[0].schedule.eta0();
    CHECK(eta == doctest::Approx(exact_resonance(sc.params, JointSpace(6), Regime::adce, 3)));
    CHECK(std::abs(eta - 2.41824) < 5e-4);
    CHECK_FALSE(sc.notes.empty());
}

TEST_CASE("chirp and dissipation") {
    std::string text = replace(minimal, "eta_over_omega = 2.41824",
                               "eta_over_omega = 2.4\n[tone.chirp]\nlambda_over_omega = 1e-3\noffset_in_lambda = "
                               "-10.0\nslope_in_lambda2 = 1.0");
    text = replace(text, "[time]", "[evolution]\nmode = \"lindblad\"\nkappa_over_g = 2e-5\ngamma_over_g = 2e-5\n"
                                   "n_cavity = 0.05\n[time]");
    const Scenario sc = parse_scenario(text, "test");
    const FrequencySchedule& f = sc.modulation.tones()[0].schedule;
    CHECK(f.eta0() == doctest::Approx(2.4 - 1e-2));
    CHECK(f.slope() == doctest::Approx(1e-6));
    CHECK(sc.dissipative);
    CHECK(sc.integrator.method == IntegrationMethod::rk4);
    CHECK(sc.lindblad.kappa == doctest::Approx(1e-6));
    CHECK(std::abs(sc.lindblad.n_atom - 0.19) < 0.005);
}

TEST_CASE("bundled scenarios") {
    const auto names = bundled_scenario_names();
    CHECK(names.size() >= 13);
    for (const std::string& n : names) CHECK_NOTHROW(bundled_scenario(n));

    const Scenario d = bundled_scenario("fig1d_adce");
    CHECK(d.params.g == doctest::Approx(0.05));
    CHECK(d.params.detuning() == doctest::Approx(8 * 0.05));
    CHECK(d.modulation.tones()[0].epsilon == doctest::Approx(0.05 * d.params.omega0));
    CHECK(std::abs(d.modulation.tones()[0].schedule.eta0() - 1.0076 * 2.4) < 5e-4);
    CHECK(d.initial.kind == InitialSpec::Kind::fock);
    CHECK(d.initial.n == 3);
    CHECK(d.initial.atom == Atom::ground);

    const Scenario lz = bundled_scenario("fig3_lz");
    const FrequencySchedule& f = lz.modulation.tones()[0].schedule;
    const double l = 1.67e-5;
    const double eta1 = lz.notes.empty() ? 0.0 : exact_resonance(lz.params, JointSpace(lz.n_max), Regime::adce, 3);
    CHECK(f.eta0() == doctest::Approx(eta1 - 10 * l).epsilon(1e-12));
    CHECK(f.slope() == doctest::Approx(l * l));
    CHECK(lz.initial.kind == InitialSpec::Kind::thermal);
    CHECK(lz.initial.n_bar == 1.5);

    const Scenario two = bundled_scenario("fig2a_two_tone");
    REQUIRE(two.modulation.tones().size() == 2);
    CHECK(two.modulation.tones()[1].epsilon == doctest::Approx(two.modulation.tones()[0].epsilon / 2));
    CHECK_THROWS_AS(bundled_scenario("nope"), ConfigError);
}

TEST_CASE("params hash is stable and sensitive") {
    const Scenario a = parse_scenario(minimal, "a");
    const Scenario b = parse_scenario(minimal, "b");
    CHECK(params_hash(a) == params_hash(b));
    CHECK(params_hash(a).size() == 16);
    const Scenario c = parse_scenario(replace(minimal, "2.41824", "2.41825"), "c");
    CHECK(params_hash(a) != params_hash(c));
}

TEST_CASE("csv output") {
    const auto dir = std::filesystem::temp_directory_path() / "rabi_runner_test";
    std::filesystem::remove_all(dir);
    const Scenario sc = parse_scenario(replace(minimal, "records = 20", "records = 20\nzoom_over_tau = [[0.01, 0.02]]"),
                                       "test");
    const RunOutput out = run_scenario(sc, dir);
    REQUIRE(out.files.size() == 2);
    std::ifstream f(out.files[0]);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(f, line) && line.rfind("#", 0) == 0) header.push_back(line);
    CHECK(line == "t_over_tau,t_omega,W_over_homega,Q_over_homega,U_over_homega,N,P_e,sigma_z,top_fock_pop");
    bool hash = false, version = false;
    for (const auto& h : header) {
        hash = hash || h.find(params_hash(sc)) != std::string::npos;
        version = version || h.find(code_version()) != std::string::npos;
    }
    CHECK(hash);
    CHECK(version);
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 21);
    CHECK(out.first_law.ok);

    // determinism
    const RunOutput again = run_scenario(sc, dir / "again");
    std::ifstream x(out.files[0]), y(again.files[0]);
    std::stringstream sx, sy;
    sx << x.rdbuf();
    sy << y.rdbuf();
    CHECK(sx.str() == sy.str());
    std::filesystem::remove_all(dir);
}

TEST_CASE("zero modulation gives zero work") {
    const Scenario sc = parse_scenario(replace(minimal, "epsilon_over_omega0 = 0.05", "epsilon_over_omega0 = 0.0"),
                                       "test");
    const Trajectory tr = simulate(sc);
    for (const Sample& s : tr.samples) CHECK(std::abs(s.work) < 1e-12);
}

TEST_CASE("batch reports exit codes per scenario") {
    const auto dir = std::filesystem::temp_directory_path() / "rabi_batch_test";
    Scenario good = parse_scenario(minimal, "test");
    Scenario bad = good;
    bad.name = "bad";
    bad.integrator.max_step = 10.0;
    const auto results = run_batch({good, bad}, dir, 2);
    REQUIRE(results.size() == 2);
    CHECK(results[0].ok);
    CHECK(results[1].exit_code == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("resonance table") {
    const SystemParams p = SystemParams::from_ratios(0.05, 8.0);
    const auto rows = resonance_table(p, 0.03, 0.0, 12);
    bool dce = false, adce = false;
    for (const ResonanceRow& r : rows) {
        if (r.regime == Regime::dce) {
            dce = true;
            CHECK(std::abs(r.eta - 2.0090) < 1e-4);
        }
        if (r.regime == Regime::adce && r.J == 3) {
            adce = true;
            CHECK(std::abs(r.eta - 2.4178) < 1e-4);
            CHECK(r.transfer_time == doctest::Approx(std::numbers::pi / (2 * r.lambda_abs)));
            REQUIRE(r.eta_exact.has_value());
        }
    }
    CHECK(dce);
    CHECK(adce);
    const std::string table = format_resonance_table(rows, 2133.3);
    CHECK(table.find(to_string(Regime::adce)) != std::string::npos);
    for (const ResonanceRow& r : rows) {
        if (!r.eta_exact) continue;
        char exact[32];
        std::snprintf(exact, sizeof exact, "%.7f", *r.eta_exact);
        CHECK(table.find(exact) != std::string::npos);
        CHECK(std::abs(*r.eta_exact - r.eta) < 0.01);
    }

    SystemParams off = p;
    off.g = 0.0;
    const auto zero = resonance_table(off, 0.03);
    for (const ResonanceRow& r : zero) {
        CHECK(r.lambda_abs == 0.0);
        CHECK(std::isinf(r.transfer_time));
    }
    CHECK(format_resonance_table(zero, 2133.3).find("no transfer") != std::string::npos);
}

TEST_CASE("figure selection") {
    CHECK(figure_scenarios("fig1").size() == 4);
    CHECK(figure_scenarios("fig3").size() == 3);
    CHECK(figure_scenarios("all").size() == 11);
    try {
        figure_scenarios("fig9");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("fig1, fig2, fig3, all") != std::string::npos);
    }
    for (const std::string& n : figure_scenarios("all")) CHECK_NOTHROW(bundled_scenario(n));
}
