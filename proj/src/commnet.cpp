#include "heterosim/commnet.hpp"

#include "heterosim/error.hpp"

#include <deque>
#include <map>

namespace heterosim {

std::int64_t WiredDelivery::latency_ticks(const SimConfig& config) const
{
    if (!hops) throw Error("undeliverable wired message has no latency");
    return static_cast<std::int64_t>(*hops) * config.per_hop_latency_ticks;
}

WiredDelivery wired_deliver(const World& world, const Message& msg)
{
    const auto* wired = std::get_if<WiredTo>(&msg.kind);
    if (wired == nullptr) throw Error("wired_deliver needs a wired message");
    return wired_deliver(world, msg.src, wired->dst);
}

WiredDelivery wired_deliver(const World& world, const ModuleId& src, const ModuleId& dst)
{
    world.module(src);
    world.module(dst);
    if (src == dst) return {0};

    std::map<ModuleId, std::vector<ModuleId>> adjacency;
    for (const auto& [cid, c] : world.connections) {
        adjacency[c.module_a].push_back(c.module_b);
        adjacency[c.module_b].push_back(c.module_a);
    }

    std::map<ModuleId, int> depth{{src, 0}};
    std::deque<ModuleId> frontier{src};
    while (!frontier.empty()) {
        auto current = frontier.front();
        frontier.pop_front();
        for (const auto& next : adjacency[current]) {
            if (!depth.emplace(next, depth[current] + 1).second) continue;
            if (next == dst) return {depth[next]};
            frontier.push_back(next);
        }
    }
    return {std::nullopt};
}

std::set<ModuleId> wireless_broadcast(const World& world, const ModuleId& src, const std::string& /*payload*/,
                                      std::mt19937_64* rng)
{
    const auto& sender = world.module(src);
    if (!(sender.battery_soc > 0.0)) throw DeadBatteryError(src);

    const double drop = world.config.wireless_drop_probability;
    if (drop > 0.0 && rng == nullptr) throw Error("a lossy wireless channel needs a random source");
    std::bernoulli_distribution dropped(drop);

    std::set<ModuleId> receivers;
    for (const auto& [id, m] : world.modules) {
        if (id == src) continue;
        if (distance(sender.pose, m.pose) > world.config.wireless_range) continue;
        if (drop > 0.0 && dropped(*rng)) continue;
        receivers.insert(id);
    }
    return receivers;
}

}  // namespace heterosim
