#include "heterosim/config.hpp"

#include "heterosim/error.hpp"

#include <charconv>
#include <cmath>
#include <variant>

namespace heterosim {
namespace {

using Field = std::variant<double SimConfig::*, std::int64_t SimConfig::*, std::uint64_t SimConfig::*,
                           bool SimConfig::*>;

struct KeyEntry {
    const char* key;
    Field field;
};

constexpr KeyEntry kKeys[] = {
    {"dt", &SimConfig::dt},
    {"max_ticks", &SimConfig::max_ticks},
    {"module_pitch", &SimConfig::module_pitch},
    {"misalignment_tolerance", &SimConfig::misalignment_tolerance},
    {"wireless_range", &SimConfig::wireless_range},
    {"wireless_drop_probability", &SimConfig::wireless_drop_probability},
    {"seed", &SimConfig::seed},
    {"per_hop_latency_ticks", &SimConfig::per_hop_latency_ticks},
    {"lock_energy_j", &SimConfig::lock_energy_j},
    {"lock_duration_s", &SimConfig::lock_duration_s},
    {"battery_energy_wh", &SimConfig::battery_energy_wh},
    {"scout_max_torque_nm", &SimConfig::scout_max_torque_nm},
    {"internal_resistance_ohm", &SimConfig::internal_resistance_ohm},
    {"limiter_current_a", &SimConfig::limiter_current_a},
    {"max_charge_current_a", &SimConfig::max_charge_current_a},
    {"idle_draw_w", &SimConfig::idle_draw_w},
    {"drive_draw_w", &SimConfig::drive_draw_w},
    {"trace_phases", &SimConfig::trace_phases},
};

template <typename T>
T parse_number(std::string_view key, std::string_view text)
{
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ValidationError(std::string(key), "cannot parse '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    if (text == "true" || text == "1" || text == "on") return true;
    if (text == "false" || text == "0" || text == "off") return false;
    throw ValidationError(std::string(key), "expected a boolean, got '" + std::string(text) + "'");
}

void require(bool ok, const char* key, const char* message)
{
    if (!ok) throw ValidationError(key, message);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }
bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& entry : kKeys) out.emplace_back(entry.key);
        return out;
    }();
    return keys;
}

void apply_override(SimConfig& config, std::string_view key, std::string_view value)
{
    for (const auto& entry : kKeys) {
        if (key != entry.key) continue;
        SimConfig candidate = config;
        std::visit(
            [&](auto member) {
                using T = std::remove_reference_t<decltype(candidate.*member)>;
                if constexpr (std::is_same_v<T, bool>) {
                    candidate.*member = parse_bool(key, value);
                } else {
                    candidate.*member = parse_number<T>(key, value);
                }
            },
            entry.field);
        validate(candidate);
        config = candidate;
        return;
    }
    throw ValidationError(std::string(key), "unknown configuration key");
}

void validate(const SimConfig& c)
{
    require(finite_positive(c.dt), "dt", "must be > 0");
    require(c.max_ticks >= 0, "max_ticks", "must be >= 0");
    require(finite_positive(c.module_pitch), "module_pitch", "must be > 0");
    require(finite_non_negative(c.misalignment_tolerance), "misalignment_tolerance", "must be >= 0");
    require(finite_non_negative(c.wireless_range), "wireless_range", "must be >= 0");
    require(std::isfinite(c.wireless_drop_probability) && c.wireless_drop_probability >= 0.0 &&
                c.wireless_drop_probability <= 1.0,
            "wireless_drop_probability", "must be in [0, 1]");
    require(c.per_hop_latency_ticks >= 0, "per_hop_latency_ticks", "must be >= 0");
    require(finite_non_negative(c.lock_energy_j), "lock_energy_j", "must be >= 0");
    require(finite_non_negative(c.lock_duration_s), "lock_duration_s", "must be >= 0");
    require(finite_positive(c.battery_energy_wh), "battery_energy_wh", "must be > 0");
    require(finite_non_negative(c.scout_max_torque_nm), "scout_max_torque_nm", "must be >= 0");
    require(finite_positive(c.internal_resistance_ohm), "internal_resistance_ohm", "must be > 0");
    require(finite_positive(c.limiter_current_a), "limiter_current_a", "must be > 0");
    require(finite_non_negative(c.max_charge_current_a), "max_charge_current_a", "must be >= 0");
    require(finite_non_negative(c.idle_draw_w), "idle_draw_w", "must be >= 0");
    require(finite_non_negative(c.drive_draw_w), "drive_draw_w", "must be >= 0");
}

}  // namespace heterosim
