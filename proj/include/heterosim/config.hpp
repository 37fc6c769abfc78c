#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace heterosim {

/// Tunable constants of a simulation run. Every field is reachable from the
/// CLI as `--set <key>=<value>`; the key names are listed by `config_keys()`.
struct SimConfig {
    double dt = 0.1;                        // s per tick
    std::int64_t max_ticks = 3000;

    double module_pitch = 0.105;            // m, center-to-center lever arm
    double misalignment_tolerance = 0.05;   // fraction of module_pitch
    double wireless_range = 2.0;            // m
    double wireless_drop_probability = 0.0;
    std::uint64_t seed = 1;
    std::int64_t per_hop_latency_ticks = 1;

    double lock_energy_j = 0.5;             // per Aligned->Locked transition
    double lock_duration_s = 2.0;           // Aligned->Locked handshake

    double battery_energy_wh = 33.0;        // active platforms
    double scout_max_torque_nm = 4.0;
    double internal_resistance_ohm = 0.1;
    double limiter_current_a = 8.0;
    double max_charge_current_a = 1.4;      // 1C of the 1,400 mAh pack

    double idle_draw_w = 0.5;
    double drive_draw_w = 5.0;

    bool trace_phases = false;
};

/// Names accepted by `apply_override`, in documentation order.
const std::vector<std::string>& config_keys();

/// Parses `value` for `key` and stores it; throws ValidationError on an
/// unknown key, unparsable value or out-of-range value.
void apply_override(SimConfig& config, std::string_view key, std::string_view value);

/// Throws ValidationError naming the first field outside its valid range.
void validate(const SimConfig& config);

}  // namespace heterosim
