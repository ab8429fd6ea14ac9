// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rabi/dressed.hpp"
#include "rabi/error.hpp"
#include "rabi/propagate.hpp"
#include "rabi/runner.hpp"

using namespace rabi;

namespace {

struct Run {
    Scenario scenario;
    Trajectory trajectory;
    double seconds = 0.0;
    bool ok = false;
    std::string error;
    std::vector<std::string> projection_labels;
};

std::filesystem::path out_dir = "acceptance_out";
std::map<std::string, Run> cache;

// Runs a bundled scenario once, writing its CSV.  The single-tone ADCE runs also record the
// populations of the two dressed levels the drive couples.
const Run& run(const std::string& name) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    Run r;
    r.scenario = bundled_scenario(name);
    if (name == "fig1d_adce" || name == "fig2a_eta1") {
        const JointSpace space(r.scenario.n_max);
        const DressedSpectrum spec = dressed_spectrum(r.scenario.params, space);
        r.scenario.integrator.projections = {spec.relative(3, 1).state.normalized(),
                                             spec.relative(1, -1).state.normalized()};
        r.projection_labels = {spec.relative(3, 1).label(), spec.relative(1, -1).label()};
    }
    std::fprintf(stderr, "running %s ...\n", name.c_str());
    const auto start = std::chrono::steady_clock::now();
    try {
        RunOutput out = run_scenario(r.scenario, out_dir);
        r.trajectory = std::move(out.trajectory);
        r.ok = true;
    } catch (const std::exception& e) {
        r.error = e.what();
        try {
            r.trajectory = simulate(r.scenario);
        } catch (const std::exception&) {
        }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "  %s finished in %.1f s%s%s\n", name.c_str(), r.seconds, r.ok ? "" : ": ", r.error.c_str());
    return cache.emplace(name, std::move(r)).first->second;
}

const Sample& min_work(const Trajectory& t) { return t.min_work(); }

// W at time t by linear interpolation on the regular grid.
double work_at(const Trajectory& tr, double t) {
    const std::vector<Sample> s = tr.regular();
    if (t <= s.front().t) return s.front().work;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (s[k].t >= t) {
            const double f = (t - s[k - 1].t) / (s[k].t - s[k - 1].t);
            return s[k - 1].work + f * (s[k].work - s[k - 1].work);
        }
    }
    return s.back().work;
}

// first time W falls to `fraction` of its minimum
double onset(const Trajectory& tr, double fraction) {
    const double target = fraction * min_work(tr).work;
    for (const Sample& s : tr.samples) {
        if (s.work <= target) return s.t;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double adce_transfer_time(const Scenario& sc, int J, double eps) {
    return resonance_frequency(sc.params, Regime::adce, J, eps).transfer_time();
}

void criterion1() {
    const Run& r = run("fig1d_adce");
    if (r.trajectory.empty()) return verdict(1, false, "run failed: " + r.error);
    const double tm = adce_transfer_time(r.scenario, 3, r.scenario.modulation.tones()[0].epsilon);
    const Sample& m = min_work(r.trajectory);
    const double dN = r.trajectory.front().excitations - m.excitations;
    const bool w_ok = m.work >= -2.2 && m.work <= -1.8;
    const bool t_ok = std::abs(m.t / tm - 1.0) <= 0.10;
    const bool n_ok = std::abs(dN - 2.0) <= 0.2;
    const bool time_ok = r.seconds < 120.0;
    verdict(1, r.ok && w_ok && t_ok && n_ok && time_ok,
            fmt("min W = %.4f (want [-2.2, -1.8]) at t = %.0f = %.3f tau_m (tau_m = %.0f, want +-10%%); "
                "N drop %.3f (want 2 +- 0.2); runtime %.1f s (< 120 s)",
                m.work, m.t, m.t / tm, tm, dN, r.seconds));
}

void criterion2() {
    const Run& r = run("fig1c_jc");
    if (r.trajectory.empty()) return verdict(2, false, "run failed: " + r.error);
    double dn = 0.0;
    for (const Sample& s : r.trajectory.samples) dn = std::max(dn, std::abs(s.excitations - 3.0));
    const double w = min_work(r.trajectory).work;
    verdict(2, r.ok && w >= -0.5 && w <= -0.3 && dn < 0.1,
            fmt("min W = %.4f (want [-0.5, -0.3], -D- = -0.4); max |N - 3| = %.4f (want < 0.1)", w, dn));
}

void criterion3() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"fig1a_dce", "fig1b_ajc"}) {
        const Run& r = run(name);
        if (r.trajectory.empty()) {
            pass = false;
            detail += std::string(name) + " failed: " + r.error + "; ";
            continue;
        }
        std::size_t positive = 0;
        for (const Sample& s : r.trajectory.samples) positive += s.work >= 0.0;
        const double frac = static_cast<double>(positive) / r.trajectory.samples.size();
        const RelationReport rel = work_energy_relation_check(r.trajectory, r.scenario.params);
        pass = pass && r.ok && frac >= 0.9 && rel.max_deviation < 0.05;
        detail += fmt("%s: W >= 0 on %.1f%% of samples, max |W - (N w - D- P_e)| = %.4f at t = %.0f; ", name,
                      100 * frac, rel.max_deviation, rel.at_time);
    }
    verdict(3, pass, detail + "(want >= 90% and < 0.05)");
}

void criterion4() {
    const SystemParams p = SystemParams::from_ratios(0.05, 8.0);
    const double eps = 0.05 * p.omega0;
    const double dce = resonance_frequency(p, Regime::dce, 0, eps).eta;
    const double ajc = resonance_frequency(p, Regime::ajc, 1, eps, 0.0, ResonanceMode::dressed_gap).eta;
    const RegimeResonance a3 = resonance_frequency(p, Regime::adce, 3, eps);
    const double a4 = resonance_frequency(p, Regime::adce, 4, eps, 0.0, ResonanceMode::dressed_gap).eta;
    const double base = 3.0 * p.omega - p.omega0;
    const double e1 = std::abs(dce - 2.0089), e2 = std::abs(ajc - 0.9943 * p.detuning_sum());
    const double e3 = std::abs(a3.eta - 1.0076 * base), e4 = std::abs(a4 - 1.0113 * base);
    const double lam = std::abs(a3.coupling());
    const double lrel = std::abs(lam - 1.67e-5) / 1.67e-5;
    verdict(4, std::max({e1, e2, e3, e4}) < 5e-4 && lrel < 0.02,
            fmt("DCE %.6f (|d| %.1e), AJC %.6f (|d| %.1e), ADCE J=3 %.6f (|d| %.1e), ADCE J=4 %.6f (|d| %.1e), "
                "all want < 5e-4; |lambda'_3| = %.4e (%.2f%% from 1.67e-5, want < 2%%)",
                dce, e1, ajc, e2, a3.eta, e3, a4, e4, lam, 100 * lrel));
}

void criterion5() {
    const auto [num, den] = adce_correction_ratio(2, 5);
    const SystemParams p = SystemParams::from_ratios(0.05, 8.0);
    const RegimeResonance r = resonance_frequency(p, Regime::adce, 3, 0.03);
    const double ratio = std::abs(*r.lambda_corrected) / std::abs(r.lambda);
    const double err = std::abs(ratio - 14.0 / 15.0);
    verdict(5, num == 14 && den == 15 && err < 1e-12,
            fmt("rational ratio %lld/%lld; float ratio error %.2e (want exactly 14/15, < 1e-12)", num, den, err));
}

void criterion6() {
    const Run& one = run("fig2a_eta1");
    const Run& two = run("fig2a_eta2");
    const Run& both = run("fig2a_two_tone");
    if (one.trajectory.empty() || two.trajectory.empty() || both.trajectory.empty()) {
        return verdict(6, false, "a thermal run failed");
    }
    const double eps1 = one.scenario.modulation.tones()[0].epsilon;
    const double tm = adce_transfer_time(one.scenario, 3, eps1);
    const double tm2 = adce_transfer_time(two.scenario, 4, two.scenario.modulation.tones()[0].epsilon);
    const double w1 = -work_at(one.trajectory, tm), w2 = -work_at(two.trajectory, tm);
    const double w12 = -work_at(both.trajectory, tm);
    const double rel = std::abs(w12 - (w1 + w2)) / (w1 + w2);
    const double p3 = thermal_population(1.5, 3), p4 = thermal_population(1.5, 4);
    verdict(6, one.ok && two.ok && both.ok && rel <= 0.10 && w1 > w2,
            fmt("at tau_m = %.0f (eta2 tau_m = %.0f): extraction eta1 %.4f, eta2 %.4f, sum %.4f, two-tone %.4f "
                "(rel. diff %.1f%%, want <= 10%%, within 5%%: %s); eta1 > eta2 ordering %s (p3 = %.4f > p4 = %.4f)",
                tm, tm2, w1, w2, w1 + w2, w12, 100 * rel, rel <= 0.05 ? "yes" : "no",
                w1 > w2 ? "holds" : "violated", p3, p4));
}

void criterion7() {
    const Run& r = run("fig3_lz");
    if (r.trajectory.empty()) return verdict(7, false, "run failed: " + r.error);
    const std::vector<Sample> s = r.trajectory.regular();
    const double t_end = s.back().t;
    double lo = 1e300, hi = -1e300, sum = 0.0;
    int n = 0;
    for (const Sample& x : s) {
        if (x.t < 0.8 * t_end) continue;
        lo = std::min(lo, x.work);
        hi = std::max(hi, x.work);
        sum += x.work;
        ++n;
    }
    const double plateau = sum / n;
    // drift of eighth-of-window block means, which averages out the per-cycle work exchange
    std::vector<double> blocks(8, 0.0);
    std::vector<int> counts(8, 0);
    for (const Sample& x : s) {
        if (x.t < 0.8 * t_end) continue;
        const int b = std::min(7, static_cast<int>((x.t - 0.8 * t_end) / (0.2 * t_end) * 8));
        blocks[b] += x.work;
        ++counts[b];
    }
    double blo = 1e300, bhi = -1e300;
    for (int b = 0; b < 8; ++b) {
        if (counts[b] == 0) continue;
        blo = std::min(blo, blocks[b] / counts[b]);
        bhi = std::max(bhi, blocks[b] / counts[b]);
    }
    double t_half = std::numeric_limits<double>::quiet_NaN();
    for (const Sample& x : s) {
        if (x.work <= plateau / 2) {
            t_half = x.t;
            break;
        }
    }
    const double lambda = 1.67e-5;
    const double tb = 5.0 / lambda;
    const bool ok = plateau >= -0.24 && plateau <= -0.16 && hi - lo < 0.02 && std::abs(t_half / tb - 1.0) <= 0.15;
    const double tau = r.scenario.tau;
    // full transfer of the |g,3> population to |e,0> would extract p3 times the dressed gap
    const double eta1 = r.scenario.modulation.tones()[0].schedule.eta0() + 10 * lambda;
    const double p_sim = -plateau / (thermal_population(1.5, 3) * eta1);
    const double lam = std::abs(resonance_frequency(r.scenario.params, Regime::adce, 3,
                                                    r.scenario.modulation.tones()[0].epsilon)
                                    .coupling());
    verdict(7, r.ok && ok,
            fmt("plateau W = %.4f (want [-0.24, -0.16]); spread over final 20%% = %.4f (want < 0.02; "
                "block-mean drift %.4f); "
                "half-plateau onset t = %.0f = %.1f tau vs 5/lambda = %.0f = %.1f tau (%.1f%%, want +-15%%); "
                "transfer probability %.3f vs LZ %.3f (xi = lambda^2) or %.3f (doubled rate)",
                plateau, hi - lo, bhi - blo, t_half, t_half / tau, tb, tb / tau, 100 * (t_half / tb - 1.0), p_sim,
                lz_probability(lam, lambda * lambda), lz_probability_doubled_rate(lam, lambda * lambda)));
}

void criterion8() {
    const Scenario d = bundled_scenario("fig2d_dissipative");
    const double na = d.lindblad.n_atom, kT = d.lindblad.reservoir_kT.value_or(0.0);
    const bool na_ok = std::abs(na - 0.19) <= 0.005 && std::abs(kT - 0.33) <= 0.005;
    const Run& u = run("fig3_lz");
    const Run& d10 = run("fig3_lz_dissipative");
    const Run& d6 = run("fig3c_lz_fast_dissipative");
    if (u.trajectory.empty() || d10.trajectory.empty() || d6.trajectory.empty()) {
        return verdict(8, false, fmt("n_a = %.4f, kT = %.4f; an LZ run failed", na, kT));
    }
    const double eu = -min_work(u.trajectory).work;
    const double e10 = -min_work(d10.trajectory).work;
    const double e6 = -min_work(d6.trajectory).work;
    const double ratio = e10 / eu;
    const double t10 = onset(d10.trajectory, 0.5), t6 = onset(d6.trajectory, 0.5);
    const bool ok = na_ok && ratio >= 0.4 && ratio <= 0.6 && t6 < t10 && e6 >= e10;
    verdict(8, u.ok && d10.ok && d6.ok && ok,
            fmt("n_a = %.4f (want 0.19 +- 0.005), kT/omega = %.4f (~0.33); dissipative/unitary extraction "
                "%.4f/%.4f = %.1f%% (want 40-60%%); -6 lambda sweep: extraction %.4f vs %.4f (want >=), "
                "half-extraction at %.1f tau vs %.1f tau (want earlier)",
                na, kT, e10, eu, 100 * ratio, e6, e10, t6 / u.scenario.tau, t10 / u.scenario.tau));
}

void criterion9() {
    std::string detail;
    bool pass = true;
    double worst_law = 0.0, worst_trace = 0.0, worst_herm = 0.0;
    std::string failed;
    for (const std::string& name : bundled_scenario_names()) {
        const Run& r = run(name);
        if (!r.ok) {
            failed += name + " (" + r.error + ") ";
            continue;
        }
        worst_law = std::max(worst_law, first_law_check(r.trajectory).max_residual);
        worst_trace = std::max(worst_trace, r.trajectory.max_trace_error);
        if (r.trajectory.final_state && !r.trajectory.final_state->is_pure()) {
            const Matrix& rho = r.trajectory.final_state->density();
            worst_herm = std::max(worst_herm, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        }
    }
    pass = failed.empty() && worst_law < 1e-4 && worst_trace < 1e-7 && worst_herm < 1e-7;
    detail += fmt("bundled scenarios: max first-law residual %.2e (< 1e-4), trace error %.2e, Hermiticity %.2e "
                  "(< 1e-7)%s; ",
                  worst_law, worst_trace, worst_herm, failed.empty() ? "" : (", failed: " + failed).c_str());

    const Run& z = run("zero_modulation");
    double wz = 0.0;
    for (const Sample& s : z.trajectory.samples) wz = std::max(wz, std::abs(s.work));
    pass = pass && z.ok && wz == 0.0;
    detail += fmt("eps = 0: max |W| = %.1e; ", wz);

    // perturbative spectrum against dense diagonalisation, and its scaling with g
    auto mismatch = [](const SystemParams& p) {
        const JointSpace s(14);
        const DressedSpectrum spec = dressed_spectrum(p, s);
        const ModulationSpec off(p.omega0, {Tone{0.0, 0.0, FrequencySchedule::constant(1.0)}});
        Eigen::SelfAdjointEigenSolver<Matrix> es(hamiltonian_at(s, p, off, 0.0));
        double worst = 0.0;
        for (const DressedLevel& l : spec.levels) {
            if (l.m > 6) continue;
            Index best = 0;
            (es.eigenvectors().adjoint() * l.state).cwiseAbs2().maxCoeff(&best);
            worst = std::max(worst, std::abs(es.eigenvalues()(best) - l.energy));
        }
        return worst;
    };
    const SystemParams p = SystemParams::from_ratios(0.05, 8.0);
    SystemParams half = p;
    half.g /= 2;
    const double e_full = mismatch(p), e_half = mismatch(half);
    pass = pass && e_full < 1e-2 && e_half < e_full / 4;
    detail += fmt("dense vs perturbative max |dE| (m <= 6) %.2e (< 1e-2), at g/2 %.2e (ratio %.1f, want >= 4); ",
                  e_full, e_half, e_full / e_half);

    // closed-form swap against simulated dressed populations at the first transfer extremum
    double worst_swap = 0.0;
    for (const char* name : {"fig1d_adce", "fig2a_eta1"}) {
        const Run& r = run(name);
        if (r.trajectory.empty() || r.trajectory.front().projections.size() != 2) {
            pass = false;
            continue;
        }
        const double tm = adce_transfer_time(r.scenario, 3, r.scenario.modulation.tones()[0].epsilon);
        const double lam = std::numbers::pi / (2.0 * tm);
        const Sample* best = nullptr;
        for (const Sample& s : r.trajectory.samples) {
            if (s.t > 2.0 * tm) break;
            if (!best || s.projections[1] > best->projections[1]) best = &s;
        }
        const Sample& s0 = r.trajectory.front();
        const auto [up, low] = adce_thermal_closed_form(s0.projections[0], s0.projections[1], lam, best->t);
        const double d = std::max(std::abs(up - best->projections[0]), std::abs(low - best->projections[1]));
        worst_swap = std::max(worst_swap, d);
        detail += fmt("%s at t = %.0f: %s %.4f vs %.4f, %s %.4f vs %.4f; ", name, best->t,
                      r.projection_labels[0].c_str(), best->projections[0], up, r.projection_labels[1].c_str(),
                      best->projections[1], low);
    }
    pass = pass && worst_swap < 0.02;
    detail += fmt("closed-form max deviation %.4f (< 0.02)", worst_swap);
    verdict(9, pass, detail);
}

void criterion10() {
    const Run& r = run("jc_low_frequency");
    if (r.trajectory.empty()) return verdict(10, false, "run failed: " + r.error);
    const Scenario& sc = r.scenario;
    const Tone& tone = sc.modulation.tones()[0];
    double peak = 0.0, dev = 0.0, wmax = 0.0;
    for (const Sample& s : r.trajectory.samples) {
        const double f = jc_low_frequency_work(sc.params, tone.epsilon, tone.schedule.eta0(), tone.phase,
                                               sc.initial.branch, sc.initial.n, s.t);
        peak = std::max(peak, std::abs(f));
        dev = std::max(dev, std::abs(f - s.work));
        wmax = std::max(wmax, std::abs(s.work));
    }
    verdict(10, r.ok && dev <= 0.1 * peak && wmax <= tone.epsilon,
            fmt("max |W_sim - W_formula| = %.2e vs 10%% of peak %.2e; max |W| = %.4f <= eps = %.4f", dev, 0.1 * peak,
                wmax, tone.epsilon));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) out_dir = argv[1];
    std::filesystem::create_directories(out_dir);
    const std::vector<std::function<void()>> checks{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                    criterion6, criterion7, criterion8, criterion9, criterion10};
    for (const auto& c : checks) {
        try {
            c();
        } catch (const std::exception& e) {
            verdict(static_cast<int>(&c - checks.data()) + 1, false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, checks.size());
    return failures == 0 ? 0 : 1;
}
