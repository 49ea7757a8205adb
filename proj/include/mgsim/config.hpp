#pragma once

#include "mgsim/microgrid.hpp"

#include <string>

// Scenario configuration: plain-text sections of key = value lines.
// See configs/benchmark.cfg for the documented schema.

namespace mgsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ObserverSettings {
    bool enabled = true;
    ObserverVariant variant = ObserverVariant::nonlinear;
    double xbar11 = 18.0;  // |i_od| bound for the Young matrix
    double xbar12 = 9.0;   // |i_oq| bound
    double pole_floor = -120.0;
    double pole_step = 10.0;
};

struct SimSettings {
    double duration = 1.0;
    double dt = 2e-5;
    uint64_t seed = 1;
    std::string output = "scenario";
};

struct DetectorConfig {
    DetectorSettings settings;
    bool chi_auto = true;  // calibrate chi_bar from an attack-free run
};

struct ScenarioConfig {
    SimSettings sim;
    MicrogridConfig microgrid;
    AttackPlan attack;
    double attack_dz_scale = 1.0;  // offset-norm multiplier of the generator
    ObserverSettings observer;
    DetectorConfig detector;

    void validate() const;

    /// Bundled benchmark scenario (parameter tables, ring digraph, defaults).
    static ScenarioConfig benchmark();
};

/// Parses a config document; throws ConfigError with the offending line and
/// path on the first problem.
ScenarioConfig parse_config(const std::string& text);

/// Canonical serialization; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ScenarioConfig& cfg);

/// Applies a single `section.key = value` override (used by sweeps).
void apply_override(ScenarioConfig& cfg, const std::string& path,
                    const std::string& value);

/// Observer bundle designed per the scenario's observer settings.
ObserverBundle make_observer_bundle(const ScenarioConfig& cfg);

/// Default per-channel corruption gains: reported neighbor values are
/// corrupted in per-unit, so a frequency-type channel scales by
/// c_freq * omega_ref and a voltage-type one by c_volt * v_ref.
std::vector<double> default_channel_scales(const MicrogridConfig& cfg,
                                           const std::vector<int>& channels);

}  // namespace mgsim
