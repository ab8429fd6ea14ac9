#include "rabi/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rabi/error.hpp"

namespace rabi {

FrequencySchedule FrequencySchedule::constant(double eta) { return FrequencySchedule(eta, 0.0, std::nullopt); }

FrequencySchedule FrequencySchedule::linear_chirp(double eta0, double slope, std::optional<ChirpWindow> window) {
    if (window && !(window->t_end > window->t_start)) {
        throw ConfigError("chirp window must satisfy t_end > t_start");
    }
    return FrequencySchedule(eta0, slope, window);
}

double FrequencySchedule::clamped(double t) const {
    if (!window_) return t;
    return std::clamp(t, window_->t_start, window_->t_end);
}

double FrequencySchedule::eta(double t) const { return eta0_ + slope_ * clamped(t); }

double FrequencySchedule::phase(double t) const { return eta(t) * t; }

double FrequencySchedule::phase_rate(double t) const {
    const bool sweeping = !window_ || (t >= window_->t_start && t <= window_->t_end);
    return eta(t) + (sweeping ? slope_ * t : 0.0);
}

ModulationSpec::ModulationSpec(double omega0, std::vector<Tone> tones) : omega0_(omega0), tones_(std::move(tones)) {
    for (const Tone& tone : tones_) {
        if (!(tone.epsilon >= 0.0)) throw ConfigError("tone amplitude epsilon must be >= 0");
    }
}

bool ModulationSpec::empty() const {
    return std::all_of(tones_.begin(), tones_.end(), [](const Tone& t) { return t.epsilon == 0.0; });
}

double ModulationSpec::omega_at(double t) const {
    double value = omega0_;
    for (const Tone& tone : tones_) {
        value += tone.epsilon * std::sin(tone.schedule.phase(t) + tone.phase);
    }
    return value;
}

double ModulationSpec::omega_dot_at(double t) const {
    double value = 0.0;
    for (const Tone& tone : tones_) {
        if (tone.epsilon == 0.0) continue;
        value += tone.epsilon * std::cos(tone.schedule.phase(t) + tone.phase) * tone.schedule.phase_rate(t);
    }
    return value;
}

double ModulationSpec::max_frequency(double t0, double t1) const {
    double best = 0.0;
    for (const Tone& tone : tones_) {
        // phase_rate is piecewise linear in t, so the extremes sit on the
        // interval ends or the window corners.
        std::vector<double> probes{t0, t1};
        if (const auto& w = tone.schedule.window()) {
            for (double c : {w->t_start, w->t_end}) {
                if (c > t0 && c < t1) probes.push_back(c);
            }
        }
        for (double t : probes) best = std::max(best, std::abs(tone.schedule.phase_rate(t)));
    }
    return best;
}

std::vector<std::string> ModulationSpec::regime_warnings(double g) const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < tones_.size(); ++k) {
        const double eps = tones_[k].epsilon;
        std::ostringstream msg;
        if (eps > g) {
            msg << "tone " << k << ": epsilon " << eps << " exceeds coupling g " << g << " (non-perturbative drive)";
            out.push_back(msg.str());
        } else if (eps > 0.1 * omega0_) {
            msg << "tone " << k << ": epsilon " << eps << " is not small against omega0 " << omega0_;
            out.push_back(msg.str());
        }
    }
    return out;
}

}  // namespace rabi
