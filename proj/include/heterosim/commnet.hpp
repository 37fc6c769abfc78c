#pragma once

#include "heterosim/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>

namespace heterosim {

struct WiredTo {
    ModuleId dst;
    bool operator==(const WiredTo&) const = default;
};
struct WirelessBroadcast {
    bool operator==(const WirelessBroadcast&) const = default;
};

struct Message {
    ModuleId src;
    std::string payload;
    std::variant<WiredTo, WirelessBroadcast> kind;

    bool operator==(const Message&) const = default;
};

/// Hop count when delivered; std::nullopt when src and dst sit in different
/// organisms (wired routing needs a docked path).
struct WiredDelivery {
    std::optional<int> hops;

    bool delivered() const noexcept { return hops.has_value(); }
    /// hops * per_hop_latency_ticks. Throws Error when undeliverable.
    std::int64_t latency_ticks(const SimConfig& config) const;
};

/// Shortest path over the docking graph. Throws Error when msg is not wired.
WiredDelivery wired_deliver(const World& world, const Message& msg);
WiredDelivery wired_deliver(const World& world, const ModuleId& src, const ModuleId& dst);

/// Every module within wireless_range of src, src excluded, ordered by id.
/// With a nonzero drop probability each receiver is dropped independently
/// using `rng`, which must then be provided. Throws DeadBatteryError when the
/// sender's battery is empty.
std::set<ModuleId> wireless_broadcast(const World& world, const ModuleId& src, const std::string& payload,
                                      std::mt19937_64* rng = nullptr);

}  // namespace heterosim
