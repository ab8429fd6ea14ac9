#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rabi {

/// Finite sweep window; outside [t_start, t_end] the frequency is held at the
/// value it takes on the nearest endpoint.
struct ChirpWindow {
    double t_start = 0.0;
    double t_end = 0.0;
};

/*
 * Frequency law eta(t) of one tone.
 *
 * The tone's phase argument is taken literally as eta(t) * t + phi, so for a
 * linear chirp eta(t) = eta0 + s t the instantaneous angular frequency is
 * d/dt[eta(t) t] = eta0 + 2 s t.
 */
class FrequencySchedule {
public:
    static FrequencySchedule constant(double eta);
    static FrequencySchedule linear_chirp(double eta0, double slope, std::optional<ChirpWindow> window = std::nullopt);

    bool is_chirp() const { return slope_ != 0.0; }
    double eta0() const { return eta0_; }
    double slope() const { return slope_; }
    const std::optional<ChirpWindow>& window() const { return window_; }

    /// eta(t).
    double eta(double t) const;
    /// eta(t) * t.
    double phase(double t) const;
    /// d/dt [eta(t) * t], the instantaneous angular frequency.
    double phase_rate(double t) const;

private:
    FrequencySchedule(double eta0, double slope, std::optional<ChirpWindow> window)
        : eta0_(eta0), slope_(slope), window_(window) {}
    double clamped(double t) const;

    double eta0_ = 0.0;
    double slope_ = 0.0;
    std::optional<ChirpWindow> window_;
};

struct Tone {
    double epsilon = 0.0;  ///< amplitude, energy units
    double phase = 0.0;    ///< phi, radians
    FrequencySchedule schedule = FrequencySchedule::constant(0.0);
};

/// Omega(t) = omega0 + sum_k eps_k sin(eta_k(t) t + phi_k).
class ModulationSpec {
public:
    ModulationSpec() = default;
    ModulationSpec(double omega0, std::vector<Tone> tones);

    double omega0() const { return omega0_; }
    const std::vector<Tone>& tones() const { return tones_; }
    bool empty() const;

    double omega_at(double t) const;
    double omega_dot_at(double t) const;

    /// Largest instantaneous angular frequency of any tone over [t0, t1].
    double max_frequency(double t0, double t1) const;

    /// Diagnostics for amplitudes outside eps <= g, eps << omega0.
    std::vector<std::string> regime_warnings(double g) const;

private:
    double omega0_ = 0.0;
    std::vector<Tone> tones_;
};

inline double omega_at(const ModulationSpec& spec, double t) { return spec.omega_at(t); }
inline double omega_dot_at(const ModulationSpec& spec, double t) { return spec.omega_dot_at(t); }

}  // namespace rabi
