#include "rabi/propagate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rabi/error.hpp"

namespace rabi {

double bose_occupation(double frequency, double kT) {
    if (!(kT > 0.0)) return 0.0;
    return 1.0 / std::expm1(frequency / kT);
}

LindbladParams LindbladParams::from_temperature(double kappa, double gamma, double kT, const SystemParams& params) {
    LindbladParams lp;
    lp.kappa = kappa;
    lp.gamma = gamma;
    lp.reservoir_kT = kT;
    lp.n_cavity = bose_occupation(params.omega, kT);
    lp.n_atom = bose_occupation(params.omega0, kT);
    return lp;
}

LindbladParams LindbladParams::from_cavity_occupation(double kappa, double gamma, double n_cavity,
                                                      const SystemParams& params) {
    if (!(n_cavity > 0.0)) {
        LindbladParams lp;
        lp.kappa = kappa;
        lp.gamma = gamma;
        lp.reservoir_kT = 0.0;
        return lp;
    }
    // n_c = 1/(exp(omega/kT) - 1)  =>  kT = omega / ln(1 + 1/n_c)
    const double kT = params.omega / std::log1p(1.0 / n_cavity);
    return from_temperature(kappa, gamma, kT, params);
}

void LindbladParams::validate(const SystemParams& params) const {
    if (kappa < 0.0 || gamma < 0.0) throw ConfigError("decay rates must be >= 0");
    if (n_cavity < 0.0 || n_atom < 0.0) throw ConfigError("thermal occupations must be >= 0");
    if (reservoir_kT) {
        const double nc = bose_occupation(params.omega, *reservoir_kT);
        const double na = bose_occupation(params.omega0, *reservoir_kT);
        if (std::abs(nc - n_cavity) > 1e-6 || std::abs(na - n_atom) > 1e-6) {
            throw ConfigError("thermal occupations inconsistent with the reservoir temperature");
        }
    }
}

Matrix hamiltonian_at(const JointSpace& space, const SystemParams& params, const ModulationSpec& spec, double t) {
    const Matrix coupling = (space.a() + space.a_dag()) * (space.sigma_plus() + space.sigma_minus());
    return params.omega * space.number() + 0.5 * spec.omega_at(t) * space.sigma_z() + params.g * coupling;
}

Matrix hamiltonian_rate_at(const JointSpace& space, const ModulationSpec& spec, double t) {
    return 0.5 * spec.omega_dot_at(t) * space.sigma_z();
}

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double fastest_frequency(const SystemParams& params, const ModulationSpec& spec, TimeSpan span) {
    return std::max({spec.max_frequency(span.t0, span.t1), params.detuning_sum(), std::abs(params.detuning())});
}

/*
 * The Rabi coupling conserves the parity of n + (atom excited), so the joint
 * space splits into two sectors.  Inside sector P the states ordered by
 * photon number k = 0..n_max form a chain,
 *
 *     sector 0:  |g,0> - |e,1> - |g,2> - |e,3> - ...
 *     sector 1:  |e,0> - |g,1> - |e,2> - |g,3> - ...
 *
 * with the atom at position k equal to (P + k) mod 2, and the interaction-
 * picture Hamiltonian is tridiagonal along each chain.  Jump operators a and
 * sigma_- move population between the sectors without changing k (sigma_-)
 * or by one step (a).
 *
 * Flat storage:
 *   pure     2 L amplitudes, chain P at offset P L
 *   density  blocks (0,0), (1,1) and, when parity coherences are present,
 *            (0,1), (1,0); each block L x L column-major.
 */
class ChainModel {
public:
    ChainModel(const JointSpace& space, const SystemParams& params, const ModulationSpec& spec,
               const LindbladParams* lindblad)
        : space_(space), params_(params), spec_(spec), L_(space.fock_levels()) {
        sqrt_.resize(L_ + 1);
        for (int n = 0; n <= L_; ++n) sqrt_[n] = std::sqrt(static_cast<double>(n));
        for (int p = 0; p < 2; ++p) {
            coupling_[p].assign(L_ > 0 ? L_ - 1 : 0, cplx(0.0));
            bare_[p].resize(L_);
            sz_[p].resize(L_);
            diag_[p].assign(L_, 0.0);
            decay_[p].assign(L_, 0.0);
            for (int k = 0; k < L_; ++k) {
                sz_[p][k] = excited(p, k) ? 1.0 : -1.0;
                bare_[p][k] = params.omega * k + 0.5 * params.omega0 * sz_[p][k];
            }
        }
        if (lindblad) {
            dissipative_ = true;
            cav_down_ = lindblad->kappa * (1.0 + lindblad->n_cavity);
            cav_up_ = lindblad->kappa * lindblad->n_cavity;
            atom_down_ = lindblad->gamma * (1.0 + lindblad->n_atom);
            atom_up_ = lindblad->gamma * lindblad->n_atom;
            const int n_max = L_ - 1;
            for (int p = 0; p < 2; ++p) {
                for (int k = 0; k < L_; ++k) {
                    // c^dag c summed over the four channels; a a^dag is truncated at n_max
                    decay_[p][k] = cav_down_ * k + cav_up_ * (k < n_max ? k + 1 : 0) +
                                   (excited(p, k) ? atom_down_ : atom_up_);
                }
            }
        }
    }

    int chain_length() const { return L_; }
    bool dissipative() const { return dissipative_; }
    bool excited(int p, int k) const { return ((p + k) & 1) == 1; }
    Index joint(int p, int k) const { return ((p + k) & 1) * L_ + k; }

    void set_time(double t) {
        if (t == time_ && initialized_) return;
        time_ = t;
        initialized_ = true;
        drive_ = 0.5 * (spec_.omega_at(t) - spec_.omega0());
        for (int p = 0; p < 2; ++p) {
            for (int k = 0; k < L_; ++k) diag_[p][k] = drive_ * sz_[p][k];
        }
        // <g,k|V_I|e,k+1> = g sqrt(k+1) e^{-i D+ t}, <e,k|V_I|g,k+1> = g sqrt(k+1) e^{-i D- t}
        const cplx crt = std::polar(params_.g, -params_.detuning_sum() * t);
        const cplx rot = std::polar(params_.g, -params_.detuning() * t);
        for (int p = 0; p < 2; ++p) {
            for (int k = 0; k + 1 < L_; ++k) {
                coupling_[p][k] = (excited(p, k) ? rot : crt) * sqrt_[k + 1];
            }
        }
    }

    double drive() const { return drive_; }
    double diag(int p, int k) const { return diag_[p][k]; }
    cplx up(int p, int k) const { return coupling_[p][k]; }  // <k|H|k+1>

    // out = -i H_I psi
    void apply_pure(const cplx* psi, cplx* out) const {
        const cplx mi(0.0, -1.0);
        for (int p = 0; p < 2; ++p) {
            const cplx* x = psi + p * L_;
            cplx* y = out + p * L_;
            const cplx* c = coupling_[p].data();
            for (int k = 0; k < L_; ++k) {
                cplx h = diag(p, k) * x[k];
                if (k + 1 < L_) h += c[k] * x[k + 1];
                if (k > 0) h += std::conj(c[k - 1]) * x[k - 1];
                y[k] = mi * h;
            }
        }
    }

    // out = -i [H_I, rho] + L(rho) on the stored blocks.  The input must be
    // Hermitian as a whole (blocks (1,0) = (0,1)^dag); only one triangle of
    // each diagonal block and the (0,1) block are computed, the rest mirrored.
    void apply_density(const cplx* rho, cplx* out, int blocks) const {
        const std::size_t bs = static_cast<std::size_t>(L_) * L_;
        for (int b = 0; b < std::min(blocks, 3); ++b) {
            const auto [p, q] = block_sectors(b);
            block_rate(p, q, rho + b * bs, rho + partner(b) * bs, out + b * bs, b < 2);
        }
        const int L = L_;
        for (int b = 0; b < 2; ++b) {
            cplx* o = out + b * bs;
            for (int j = 0; j < L; ++j) {
                for (int i = j + 1; i < L; ++i) o[j + i * L] = std::conj(o[i + j * L]);
            }
        }
        if (blocks == 4) {
            const cplx* o01 = out + 2 * bs;
            cplx* o10 = out + 3 * bs;
            for (int j = 0; j < L; ++j) {
                for (int i = 0; i < L; ++i) o10[j + i * L] = std::conj(o01[i + j * L]);
            }
        }
    }

    // Single entry (i, j) of L(rho) in block b.
    cplx dissipator_entry(int b, const cplx* rho, int i, int j) const {
        const std::size_t bs = static_cast<std::size_t>(L_) * L_;
        const auto [p, q] = block_sectors(b);
        const cplx* r = rho + b * bs;
        const cplx* s = rho + partner(b) * bs;
        return jump_terms(p, q, s, i, j) - 0.5 * (decay_[p][i] + decay_[q][j]) * r[i + j * L_];
    }

    static std::pair<int, int> block_sectors(int b) {
        static constexpr std::array<std::pair<int, int>, 4> table{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}};
        return table[b];
    }
    // block fed by the jump operators (both sectors flipped)
    static int partner(int b) { return b ^ 1; }

private:
    // Rows i >= j only when lower is set.
    void block_rate(int p, int q, const cplx* r, const cplx* s, cplx* o, bool lower) const {
        const cplx* cp = coupling_[p].data();
        const cplx* cq = coupling_[q].data();
        const double* dp = decay_[p].data();
        const int L = L_;
        const cplx mi(0.0, -1.0);
        for (int j = 0; j < L; ++j) {
            const cplx* col = r + j * L;
            const cplx* left = j > 0 ? r + (j - 1) * L : nullptr;
            const cplx* right = j + 1 < L ? r + (j + 1) * L : nullptr;
            const double dq = diag(q, j);
            const cplx hq_left = j > 0 ? cq[j - 1] : cplx(0.0);              // (H_q)_{j-1,j}
            const cplx hq_right = j + 1 < L ? std::conj(cq[j]) : cplx(0.0);  // (H_q)_{j+1,j}
            const double gq = decay_[q][j];
            const bool ej = excited(q, j);
            // jump feeds: a rho a^dag from column j+1, a^dag rho a from column j-1
            const cplx* s_dn = j + 1 < L ? s + (j + 1) * L : nullptr;
            const cplx* s_up = j > 0 ? s + (j - 1) * L : nullptr;
            const double down_j = j + 1 < L ? cav_down_ * sqrt_[j + 1] : 0.0;
            const double up_j = cav_up_ * sqrt_[j];
            const cplx* s_col = s + j * L;
            cplx* oc = o + j * L;
            // atomic jump coefficient by parity of i
            double atom_c[2];
            for (int par = 0; par < 2; ++par) {
                const bool ei = excited(p, par);
                atom_c[par] = dissipative_ && ei == ej ? (ei ? atom_up_ : atom_down_) : 0.0;
            }
            const double* dg = diag_[p].data();
            auto entry = [&](int i) {
                cplx v = (dg[i] - dq) * col[i];
                if (i + 1 < L) v += cp[i] * col[i + 1];
                if (i > 0) v += std::conj(cp[i - 1]) * col[i - 1];
                if (left) v -= left[i] * hq_left;
                if (right) v -= right[i] * hq_right;
                cplx rate = mi * v;
                if (dissipative_) {
                    rate -= 0.5 * (dp[i] + gq) * col[i];
                    if (s_dn && i + 1 < L) rate += down_j * sqrt_[i + 1] * s_dn[i + 1];
                    if (s_up && i > 0) rate += up_j * sqrt_[i] * s_up[i - 1];
                    rate += atom_c[i & 1] * s_col[i];
                }
                oc[i] = rate;
            };
            const int begin = lower ? j : 0;
            if (begin == 0 || !left || !right || !dissipative_) {
                for (int i = begin; i < L; ++i) entry(i);
                continue;
            }
            // interior columns of a dissipative run: no edge tests in the row loop
            const int first = std::max(begin, 1);
            for (int i = begin; i < first; ++i) entry(i);
            for (int i = first; i < L - 1; ++i) {
                const cplx v = (dg[i] - dq) * col[i] + cp[i] * col[i + 1] + std::conj(cp[i - 1]) * col[i - 1] -
                               left[i] * hq_left - right[i] * hq_right;
                oc[i] = cplx(v.imag(), -v.real()) - 0.5 * (dp[i] + gq) * col[i] +
                        down_j * sqrt_[i + 1] * s_dn[i + 1] + up_j * sqrt_[i] * s_up[i - 1] +
                        atom_c[i & 1] * s_col[i];
            }
            entry(L - 1);
        }
    }

    cplx jump_terms(int p, int q, const cplx* s, int i, int j) const {
        const int L = L_;
        cplx v = 0.0;
        if (i + 1 < L && j + 1 < L) v += cav_down_ * sqrt_[i + 1] * sqrt_[j + 1] * s[(i + 1) + (j + 1) * L];
        if (i > 0 && j > 0) v += cav_up_ * sqrt_[i] * sqrt_[j] * s[(i - 1) + (j - 1) * L];
        const bool ei = excited(p, i);
        const bool ej = excited(q, j);
        if (!ei && !ej) v += atom_down_ * s[i + j * L];
        if (ei && ej) v += atom_up_ * s[i + j * L];
        return v;
    }

    const JointSpace& space_;
    const SystemParams& params_;
    const ModulationSpec& spec_;
    int L_;
    std::vector<double> sqrt_;
    std::array<std::vector<cplx>, 2> coupling_;
    std::array<std::vector<double>, 2> bare_;
    std::array<std::vector<double>, 2> sz_;
    std::array<std::vector<double>, 2> diag_;
    std::array<std::vector<double>, 2> decay_;
    double time_ = 0.0;
    bool initialized_ = false;
    double drive_ = 0.0;
    bool dissipative_ = false;
    double cav_down_ = 0.0, cav_up_ = 0.0, atom_down_ = 0.0, atom_up_ = 0.0;

    friend class Propagation;
};

/// Carries one run: state layout, frame conversions, observables, stepping.
class Propagation {
public:
    Propagation(const JointSpace& space, const SystemParams& params, const ModulationSpec& spec,
                const LindbladParams* lindblad, const IntegratorConfig& config)
        : space_(space), params_(params), spec_(spec), config_(config), model_(space, params, spec, lindblad) {}

    Trajectory run(const QuantumState& initial, TimeSpan span, bool force_density) {
        if (!(span.t1 > span.t0) || !std::isfinite(span.t1) || !std::isfinite(span.t0)) {
            throw ConfigError("time span must be finite with t1 > t0");
        }
        if (initial.dim() != space_.dim()) throw ConfigError("initial state dimension does not match the space");
        initial.validate(!initial.is_pure());
        pure_ = initial.is_pure() && !force_density;
        load(initial, span.t0);

        Trajectory traj;
        traj.dissipative = model_.dissipative();
        if (config_.method == IntegrationMethod::rk4) {
            run_fixed(span, traj);
        } else {
            run_adaptive(span, traj);
        }
        traj.final_state = lab_state(y_, t_);
        return traj;
    }

private:
    // ---- layout -----------------------------------------------------------
    std::size_t block_size() const { return static_cast<std::size_t>(L()) * L(); }
    int L() const { return model_.chain_length(); }

    void load(const QuantumState& initial, double t0) {
        const int Ln = L();
        if (pure_) {
            const Vector& psi = initial.vector();
            y_ = Vector::Zero(2 * Ln);
            for (int p = 0; p < 2; ++p) {
                for (int k = 0; k < Ln; ++k) {
                    const Index j = model_.joint(p, k);
                    y_(p * Ln + k) = std::polar(1.0, bare_energy(j) * t0) * psi(j);
                }
            }
            return;
        }
        const Matrix rho = initial.to_density();
        double cross = 0.0;
        for (int i = 0; i < Ln; ++i) {
            for (int j = 0; j < Ln; ++j) {
                cross = std::max(cross, std::abs(rho(model_.joint(0, i), model_.joint(1, j))));
            }
        }
        blocks_ = cross > 0.0 ? 4 : 2;
        y_ = Vector::Zero(static_cast<Index>(blocks_ * block_size()));
        for (int b = 0; b < blocks_; ++b) {
            const auto [p, q] = ChainModel::block_sectors(b);
            for (int j = 0; j < Ln; ++j) {
                for (int i = 0; i < Ln; ++i) {
                    const Index ji = model_.joint(p, i);
                    const Index jj = model_.joint(q, j);
                    y_(b * block_size() + i + j * Ln) =
                        std::polar(1.0, (bare_energy(ji) - bare_energy(jj)) * t0) * rho(ji, jj);
                }
            }
        }
        symmetrize(y_);
    }

    double bare_energy(Index j) const {
        return params_.omega * space_.photons(j) + 0.5 * params_.omega0 * space_.sigma_z_value(j);
    }

    QuantumState lab_state(const Vector& y, double t) const {
        const int Ln = L();
        if (pure_) {
            Vector psi = Vector::Zero(space_.dim());
            for (int p = 0; p < 2; ++p) {
                for (int k = 0; k < Ln; ++k) {
                    const Index j = model_.joint(p, k);
                    psi(j) = std::polar(1.0, -bare_energy(j) * t) * y(p * Ln + k);
                }
            }
            return QuantumState::pure(std::move(psi));
        }
        Matrix rho = Matrix::Zero(space_.dim(), space_.dim());
        for (int b = 0; b < blocks_; ++b) {
            const auto [p, q] = ChainModel::block_sectors(b);
            for (int j = 0; j < Ln; ++j) {
                for (int i = 0; i < Ln; ++i) {
                    const Index ji = model_.joint(p, i);
                    const Index jj = model_.joint(q, j);
                    rho(ji, jj) = std::polar(1.0, -(bare_energy(ji) - bare_energy(jj)) * t) *
                                  y(b * block_size() + i + j * Ln);
                }
            }
        }
        return QuantumState::mixed(std::move(rho));
    }

    // ---- generator --------------------------------------------------------
    void rhs(double t, const Vector& y, Vector& out) {
        model_.set_time(t);
        if (pure_) {
            model_.apply_pure(y.data(), out.data());
        } else {
            model_.apply_density(y.data(), out.data(), blocks_);
        }
    }

    void symmetrize(Vector& y) const {
        if (pure_) return;
        const int Ln = L();
        const std::size_t bs = block_size();
        for (int b = 0; b < 2; ++b) {
            cplx* r = y.data() + b * bs;
            for (int j = 0; j < Ln; ++j) {
                r[j + j * Ln] = r[j + j * Ln].real();
                for (int i = j + 1; i < Ln; ++i) {
                    const cplx avg = 0.5 * (r[i + j * Ln] + std::conj(r[j + i * Ln]));
                    r[i + j * Ln] = avg;
                    r[j + i * Ln] = std::conj(avg);
                }
            }
        }
        if (blocks_ == 4) {
            cplx* r01 = y.data() + 2 * bs;
            cplx* r10 = y.data() + 3 * bs;
            for (int j = 0; j < Ln; ++j) {
                for (int i = 0; i < Ln; ++i) {
                    const cplx avg = 0.5 * (r01[i + j * Ln] + std::conj(r10[j + i * Ln]));
                    r01[i + j * Ln] = avg;
                    r10[j + i * Ln] = std::conj(avg);
                }
            }
        }
    }

    // ---- observables ------------------------------------------------------
    double population(const Vector& y, int p, int k) const {
        if (pure_) return std::norm(y(p * L() + k));
        return y(p * block_size() + k + k * L()).real();
    }

    double sigma_z(const Vector& y) const {
        double s = 0.0;
        for (int p = 0; p < 2; ++p) {
            for (int k = 0; k < L(); ++k) s += (model_.excited(p, k) ? 1.0 : -1.0) * population(y, p, k);
        }
        return s;
    }

    // <V_I> at the model's current time
    double coupling_energy(const Vector& y) const {
        double e = 0.0;
        const int Ln = L();
        for (int p = 0; p < 2; ++p) {
            for (int k = 0; k + 1 < Ln; ++k) {
                const cplx c = model_.up(p, k);
                if (pure_) {
                    e += 2.0 * (std::conj(y(p * Ln + k)) * c * y(p * Ln + k + 1)).real();
                } else {
                    e += 2.0 * (c * y(p * block_size() + (k + 1) + k * Ln)).real();
                }
            }
        }
        return e;
    }

    // Tr(L(rho) H) with H the full Hamiltonian in the rotating frame
    double heat_rate(double t, const Vector& y) {
        if (pure_ || !model_.dissipative()) return 0.0;
        model_.set_time(t);
        const int Ln = L();
        double q = 0.0;
        for (int p = 0; p < 2; ++p) {
            for (int k = 0; k < Ln; ++k) {
                const double h = model_.bare_[p][k] + model_.diag(p, k);
                q += model_.dissipator_entry(p, y.data(), k, k).real() * h;
                if (k + 1 < Ln) {
                    q += 2.0 * (model_.up(p, k) * model_.dissipator_entry(p, y.data(), k + 1, k)).real();
                }
            }
        }
        return q;
    }

    double trace_rate(double t, const Vector& y) const {
        return trace_work_rate(lab_state(y, t), hamiltonian_rate_at(space_, spec_, t));
    }

    Sample observe(double t, const Vector& y) {
        model_.set_time(t);
        Sample s;
        s.t = t;
        double energy = 0.0, n = 0.0, pe = 0.0, sz = 0.0, top = 0.0, trace = 0.0;
        const int Ln = L();
        for (int p = 0; p < 2; ++p) {
            for (int k = 0; k < Ln; ++k) {
                const double pop = population(y, p, k);
                const bool e = model_.excited(p, k);
                trace += pop;
                energy += pop * (model_.bare_[p][k] + model_.diag(p, k));
                n += pop * (k + (e ? 1.0 : 0.0));
                if (e) pe += pop;
                sz += pop * (e ? 1.0 : -1.0);
                if (k >= Ln - 2) top += pop;
            }
        }
        s.internal_energy = energy + coupling_energy(y);
        s.excitations = n;
        s.excited_population = pe;
        s.sigma_z = sz;
        s.top_fock_population = top;
        s.work = work_;
        s.heat_direct = heat_direct_;
        if (config_.track_trace_work) s.trace_work = trace_work_;
        last_trace_ = trace;
        return s;
    }

    void record(double t, const Vector& y, Trajectory& traj, bool dense) {
        Sample s = observe(t, y);
        s.dense = dense;
        if (traj.samples.empty()) u0_ = s.internal_energy;
        s.heat = s.internal_energy - u0_ - s.work;
        traj.max_trace_error = std::max(traj.max_trace_error, std::abs(last_trace_ - 1.0));
        traj.max_top_fock_population = std::max(traj.max_top_fock_population, s.top_fock_population);
        if (!std::isfinite(s.internal_energy)) throw NumericalError("propagation produced non-finite values");

        const bool need_state = config_.observer || !config_.projections.empty() || config_.check_positivity;
        if (need_state) {
            const QuantumState state = lab_state(y, t);
            for (const Vector& v : config_.projections) {
                s.projections.push_back(state.is_pure() ? std::norm(v.dot(state.vector()))
                                                        : v.dot(state.density() * v).real());
            }
            if (config_.check_positivity && !state.is_pure()) {
                const double lmin = state.min_eigenvalue();
                if (lmin < -QuantumState::positivity_tolerance) {
                    std::ostringstream msg;
                    msg << "density matrix lost positivity at t=" << t << " (eigenvalue " << lmin << ")";
                    throw NumericalError(msg.str());
                }
            }
            if (config_.observer) config_.observer(t, state);
        }
        if (config_.enforce_truncation_audit && s.top_fock_population > config_.truncation_limit) {
            std::ostringstream msg;
            msg << "truncation audit failed at t=" << t << ": population of the top two Fock levels "
                << s.top_fock_population << " exceeds " << config_.truncation_limit << " (increase n_max)";
            throw AuditError(msg.str());
        }
        traj.samples.push_back(std::move(s));
    }

    // Quadratures over one accepted step [t, t + h] given the end-point
    // derivatives; the midpoint state is the cubic Hermite interpolant.
    void integrate_step(double t, double h, const Vector& y0, const Vector& f0, const Vector& y1, const Vector& f1) {
        mid_ = 0.5 * (y0 + y1) + (h / 8.0) * (f0 - f1);
        const double sz1 = sigma_z(y1);
        work_integrator_->add_step(t, h, sz_prev_, sigma_z(mid_), sz1);
        work_ = work_integrator_->value();
        if (model_.dissipative()) {
            const double q1 = heat_rate(t + h, y1);
            heat_direct_ += WorkIntegrator::simpson(h, q_prev_, heat_rate(t + 0.5 * h, mid_), q1);
            q_prev_ = q1;
        }
        if (config_.track_trace_work) {
            const double r1 = trace_rate(t + h, y1);
            trace_work_ += WorkIntegrator::simpson(h, tr_prev_, trace_rate(t + 0.5 * h, mid_), r1);
            tr_prev_ = r1;
        }
        sz_prev_ = sz1;
    }

    void start_quadratures(double t0) {
        work_integrator_.emplace(spec_);
        work_ = heat_direct_ = trace_work_ = 0.0;
        sz_prev_ = sigma_z(y_);
        q_prev_ = heat_rate(t0, y_);
        tr_prev_ = config_.track_trace_work ? trace_rate(t0, y_) : 0.0;
    }

    double step_limit(TimeSpan span) const {
        const double nu = fastest_frequency(params_, spec_, span);
        const double drive = spec_.max_frequency(span.t0, span.t1);
        if (config_.max_step > 0.0) {
            if (drive > 0.0 && config_.max_step > two_pi / (25.0 * drive)) {
                throw ConfigError("max_step exceeds 2 pi / (25 eta_max) for this drive");
            }
            return config_.max_step;
        }
        if (config_.steps_per_period < 25) throw ConfigError("steps_per_period must be >= 25");
        return two_pi / (config_.steps_per_period * nu);
    }

    double drive_period(TimeSpan span) const {
        const double eta = spec_.max_frequency(span.t0, span.t1);
        return eta > 0.0 ? two_pi / eta : std::numeric_limits<double>::infinity();
    }

    bool in_dense_window(double t) const {
        for (const TimeSpan& w : config_.sampling.dense_windows) {
            if (t >= w.t0 && t <= w.t1) return true;
        }
        return false;
    }

    void run_fixed(TimeSpan span, Trajectory& traj) {
        const double length = span.t1 - span.t0;
        const double h_max = step_limit(span);
        const long records = std::max(1, config_.sampling.records);
        const long stride = std::max<long>(1, static_cast<long>(std::ceil(length / (records * h_max))));
        const long n_steps = records * stride;
        const double h = length / n_steps;
        long dense_stride = 1;
        if (!config_.sampling.dense_windows.empty()) {
            const double dt_dense = drive_period(span) / std::max(1, config_.sampling.samples_per_period);
            dense_stride = std::max<long>(1, static_cast<long>(std::floor(dt_dense / h)));
        }

        Vector k1(y_.size()), k2(y_.size()), k3(y_.size()), k4(y_.size()), tmp(y_.size()), y1(y_.size()),
            f1(y_.size());
        t_ = span.t0;
        start_quadratures(t_);
        record(t_, y_, traj, false);
        rhs(t_, y_, k1);
        for (long step = 0; step < n_steps; ++step) {
            const double t = span.t0 + step * h;
            const double tn = span.t0 + (step + 1) * h;
            tmp = y_ + (0.5 * h) * k1;
            rhs(t + 0.5 * h, tmp, k2);
            tmp = y_ + (0.5 * h) * k2;
            rhs(t + 0.5 * h, tmp, k3);
            tmp = y_ + h * k3;
            rhs(tn, tmp, k4);
            y1 = y_ + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            symmetrize(y1);
            rhs(tn, y1, f1);
            integrate_step(t, h, y_, k1, y1, f1);
            y_.swap(y1);
            k1.swap(f1);
            t_ = tn;
            const long done = step + 1;
            if (done % stride == 0) {
                record(t_, y_, traj, false);
            } else if (done % dense_stride == 0 && in_dense_window(t_)) {
                record(t_, y_, traj, true);
            }
        }
        traj.steps = static_cast<std::size_t>(n_steps);
    }

    // Dormand-Prince 5(4) with step control, landing exactly on record times.
    void run_adaptive(TimeSpan span, Trajectory& traj) {
        const double length = span.t1 - span.t0;
        const double h_max = step_limit(span);
        const int records = std::max(1, config_.sampling.records);
        std::vector<std::pair<double, bool>> targets;
        for (int r = 1; r <= records; ++r) targets.emplace_back(span.t0 + length * r / records, false);
        if (!config_.sampling.dense_windows.empty()) {
            const double dt_dense = drive_period(span) / std::max(1, config_.sampling.samples_per_period);
            for (const TimeSpan& w : config_.sampling.dense_windows) {
                const double a = std::max(w.t0, span.t0);
                const double b = std::min(w.t1, span.t1);
                for (double t = a; t <= b && std::isfinite(dt_dense); t += dt_dense) {
                    if (t > span.t0) targets.emplace_back(t, true);
                }
            }
        }
        std::sort(targets.begin(), targets.end());

        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                                b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                                e6 = 22.0 / 525, e7 = -1.0 / 40;

        const Index n = y_.size();
        Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n), err(n);
        t_ = span.t0;
        start_quadratures(t_);
        record(t_, y_, traj, false);
        rhs(t_, y_, k1);
        double h = std::min(h_max, length / records);
        std::size_t steps = 0;
        for (const auto& [target, dense] : targets) {
            if (target <= t_) continue;
            while (t_ < target) {
                bool last = false;
                double hs = h;
                if (t_ + hs >= target) {
                    hs = target - t_;
                    last = true;
                }
                if (hs < config_.min_step && !last) {
                    std::ostringstream msg;
                    msg << "step size underflow at t=" << t_ << " (h=" << hs << ")";
                    throw NumericalError(msg.str());
                }
                const double t = t_;
                tmp = y_ + hs * (a21 * k1);
                rhs(t + c2 * hs, tmp, k2);
                tmp = y_ + hs * (a31 * k1 + a32 * k2);
                rhs(t + c3 * hs, tmp, k3);
                tmp = y_ + hs * (a41 * k1 + a42 * k2 + a43 * k3);
                rhs(t + c4 * hs, tmp, k4);
                tmp = y_ + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
                rhs(t + c5 * hs, tmp, k5);
                tmp = y_ + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
                rhs(t + hs, tmp, k6);
                y1 = y_ + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
                rhs(t + hs, y1, k7);
                err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
                double norm = 0.0;
                for (Index i = 0; i < n; ++i) {
                    const double scale =
                        config_.atol + config_.rtol * std::max(std::abs(y_(i)), std::abs(y1(i)));
                    norm += std::norm(err(i)) / (scale * scale);
                }
                norm = std::sqrt(norm / static_cast<double>(n));
                if (norm <= 1.0) {
                    symmetrize(y1);
                    if (!pure_) rhs(t + hs, y1, k7);
                    integrate_step(t, hs, y_, k1, y1, k7);
                    y_.swap(y1);
                    k1.swap(k7);
                    t_ = last ? target : t + hs;
                    ++steps;
                }
                const double factor = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
                const double grown = hs * std::clamp(factor, 0.2, 5.0);
                // keep the pre-truncation step when we only shortened it to land on a target
                h = std::min(h_max, (last && norm <= 1.0) ? std::max(h, grown) : grown);
                if (h < config_.min_step) {
                    std::ostringstream msg;
                    msg << "step size underflow at t=" << t_ << " (h=" << h << ")";
                    throw NumericalError(msg.str());
                }
            }
            record(t_, y_, traj, dense);
        }
        traj.steps = steps;
    }

    const JointSpace& space_;
    const SystemParams& params_;
    const ModulationSpec& spec_;
    const IntegratorConfig& config_;
    ChainModel model_;
    bool pure_ = true;
    int blocks_ = 2;
    Vector y_, mid_;
    double t_ = 0.0;

    std::optional<WorkIntegrator> work_integrator_;
    double work_ = 0.0, heat_direct_ = 0.0, trace_work_ = 0.0;
    double sz_prev_ = 0.0, q_prev_ = 0.0, tr_prev_ = 0.0;
    double u0_ = 0.0;
    double last_trace_ = 1.0;
};

}  // namespace

double default_step(const SystemParams& params, const ModulationSpec& spec, TimeSpan span,
                    const IntegratorConfig& config) {
    const double nu = fastest_frequency(params, spec, span);
    const double h_max = config.max_step > 0.0 ? config.max_step : two_pi / (config.steps_per_period * nu);
    const double length = span.t1 - span.t0;
    const long records = std::max(1, config.sampling.records);
    const long stride = std::max<long>(1, static_cast<long>(std::ceil(length / (records * h_max))));
    return length / (records * stride);
}

namespace {

// Populations of a mixed state that is diagonal in the joint basis.
std::optional<Eigen::VectorXd> basis_diagonal(const QuantumState& state) {
    if (state.is_pure()) return std::nullopt;
    const Matrix& rho = state.density();
    Matrix off = rho;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > 0.0) return std::nullopt;
    return state.populations();
}

/*
 * Unitary evolution is linear in rho, so a basis-diagonal mixture evolves as
 * the weighted sum of its pure components.  Every recorded observable is
 * linear in rho as well and is summed sample by sample.
 */
Trajectory evolve_ensemble(const Eigen::VectorXd& weights, const JointSpace& space, const SystemParams& params,
                           const ModulationSpec& spec, TimeSpan span, const IntegratorConfig& config) {
    IntegratorConfig member = config;
    member.enforce_truncation_audit = false;
    Trajectory total;
    Matrix rho = Matrix::Zero(space.dim(), space.dim());
    bool first = true;
    for (Index i = 0; i < weights.size(); ++i) {
        const double w = weights(i);
        if (w <= 0.0) continue;
        Vector psi = Vector::Zero(space.dim());
        psi(i) = 1.0;
        Propagation run(space, params, spec, nullptr, member);
        Trajectory part = run.run(QuantumState::pure(std::move(psi)), span, false);
        const Vector& fin = part.final_state->vector();
        rho += w * fin * fin.adjoint();
        total.max_trace_error += w * part.max_trace_error;
        total.steps = part.steps;
        if (first) {
            total.samples = part.samples;
            for (Sample& s : total.samples) {
                s.internal_energy *= w;
                s.work *= w;
                s.heat *= w;
                s.excitations *= w;
                s.excited_population *= w;
                s.sigma_z *= w;
                s.top_fock_population *= w;
                s.heat_direct *= w;
                s.trace_work *= w;
                for (double& v : s.projections) v *= w;
            }
            first = false;
            continue;
        }
        for (std::size_t k = 0; k < total.samples.size(); ++k) {
            Sample& s = total.samples[k];
            const Sample& x = part.samples[k];
            s.internal_energy += w * x.internal_energy;
            s.work += w * x.work;
            s.heat += w * x.heat;
            s.excitations += w * x.excitations;
            s.excited_population += w * x.excited_population;
            s.sigma_z += w * x.sigma_z;
            s.top_fock_population += w * x.top_fock_population;
            s.heat_direct += w * x.heat_direct;
            s.trace_work += w * x.trace_work;
            for (std::size_t m = 0; m < s.projections.size(); ++m) s.projections[m] += w * x.projections[m];
        }
    }
    for (const Sample& s : total.samples) {
        total.max_top_fock_population = std::max(total.max_top_fock_population, s.top_fock_population);
        if (config.enforce_truncation_audit && s.top_fock_population > config.truncation_limit) {
            std::ostringstream msg;
            msg << "truncation audit failed at t=" << s.t << ": population of the top two Fock levels "
                << s.top_fock_population << " exceeds " << config.truncation_limit << " (increase n_max)";
            throw AuditError(msg.str());
        }
    }
    total.final_state = QuantumState::mixed(std::move(rho));
    return total;
}

// the propagators also accept the decoupled limit g = 0
void check_dynamics_params(const SystemParams& params) {
    if (params.g == 0.0) {
        SystemParams coupled = params;
        coupled.g = 1.0;
        coupled.validate();
    } else {
        params.validate();
    }
}

}  // namespace

Trajectory evolve_unitary(const QuantumState& initial, const JointSpace& space, const SystemParams& params,
                          const ModulationSpec& spec, TimeSpan span, const IntegratorConfig& config) {
    check_dynamics_params(params);
    if (!config.observer && !config.check_positivity) {
        if (const auto weights = basis_diagonal(initial)) {
            initial.validate(false);
            if (initial.dim() != space.dim()) throw ConfigError("initial state dimension does not match the space");
            return evolve_ensemble(*weights, space, params, spec, span, config);
        }
    }
    Propagation run(space, params, spec, nullptr, config);
    return run.run(initial, span, false);
}

Trajectory evolve_lindblad(const QuantumState& initial, const JointSpace& space, const SystemParams& params,
                           const ModulationSpec& spec, const LindbladParams& lindblad, TimeSpan span,
                           const IntegratorConfig& config) {
    check_dynamics_params(params);
    lindblad.validate(params);
    Propagation run(space, params, spec, &lindblad, config);
    return run.run(initial, span, true);
}

double lindblad_rate_norm(const QuantumState& state, const JointSpace& space, const SystemParams& params,
                          const ModulationSpec& spec, const LindbladParams& lindblad, double t) {
    const Matrix rho = state.to_density();
    const Matrix h = hamiltonian_at(space, params, spec, t);
    Matrix rate = cplx(0.0, -1.0) * (h * rho - rho * h);
    auto dissipate = [&](const Matrix& c, double rate_c) {
        if (rate_c == 0.0) return;
        const Matrix cdc = c.adjoint() * c;
        rate += rate_c * (c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc));
    };
    dissipate(space.sigma_minus(), lindblad.gamma * (1.0 + lindblad.n_atom));
    dissipate(space.sigma_plus(), lindblad.gamma * lindblad.n_atom);
    dissipate(space.a(), lindblad.kappa * (1.0 + lindblad.n_cavity));
    dissipate(space.a_dag(), lindblad.kappa * lindblad.n_cavity);
    return rate.cwiseAbs().maxCoeff();
}

}  // namespace rabi
