#pragma once

// Reference computations written independently of the library code paths
// they check: brute-force graph search, a 1 mV bus-voltage grid scan and a
// direct moment sum.

#include "heterosim/model.hpp"
#include "heterosim/powerbus.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <vector>

namespace heterosim::testing {

using Adjacency = std::map<ModuleId, std::vector<ModuleId>>;

inline Adjacency adjacency_of(const World& world)
{
    Adjacency adj;
    for (const auto& [id, m] : world.modules) adj[id];
    for (const auto& [cid, c] : world.connections) {
        adj[c.module_a].push_back(c.module_b);
        adj[c.module_b].push_back(c.module_a);
    }
    return adj;
}

/// Hop distance from src to every reachable module.
inline std::map<ModuleId, int> bfs_distances(const Adjacency& adj, const ModuleId& src)
{
    std::map<ModuleId, int> dist{{src, 0}};
    std::deque<ModuleId> queue{src};
    while (!queue.empty()) {
        const auto cur = queue.front();
        queue.pop_front();
        for (const auto& next : adj.at(cur)) {
            if (dist.emplace(next, dist[cur] + 1).second) queue.push_back(next);
        }
    }
    return dist;
}

/// Component label per module: the smallest id reachable from it.
inline std::map<ModuleId, ModuleId> component_labels(const World& world)
{
    const auto adj = adjacency_of(world);
    std::map<ModuleId, ModuleId> label;
    for (const auto& [id, neighbours] : adj) {
        if (label.count(id)) continue;
        for (const auto& [member, d] : bfs_distances(adj, id)) label[member] = id;  // map order: id is smallest
    }
    return label;
}

inline double oracle_balance(const BusProblem& p, double v)
{
    double total = 0.0;
    for (const auto& n : p.nodes) {
        if (n.has_battery && n.sharing_on) {
            total += std::min(std::max((n.open_circuit_v - v) / p.internal_resistance_ohm, 0.0), n.supply_cap_a);
        }
        if (n.has_battery && !n.sharing_on) {
            total -= std::min(std::max((v - n.open_circuit_v) / p.internal_resistance_ohm, 0.0), n.charge_cap_a);
        }
        total -= n.load_w / v;
    }
    return total;
}

struct GridVerdict {
    bool no_supplier = false;
    bool open_bus = false;          // nothing exports and nothing draws
    std::optional<double> voltage;  // highest grid point with supply >= demand
};

/// Walks down from the highest exporting open-circuit voltage in 1 mV steps.
inline GridVerdict grid_search_bus_voltage(const BusProblem& p)
{
    GridVerdict verdict;
    double top = -1.0;
    double load = 0.0;
    for (const auto& n : p.nodes) {
        load += n.load_w;
        if (n.has_battery && n.sharing_on && n.supply_cap_a > 0.0) top = std::max(top, n.open_circuit_v);
    }
    if (top < 0.0) {
        verdict.no_supplier = load > 0.0;
        verdict.open_bus = load == 0.0;
        return verdict;
    }
    const auto steps = static_cast<long>((top - p.v_min) / 0.001);
    for (long k = 0; k <= steps; ++k) {
        const double v = top - 0.001 * static_cast<double>(k);
        if (oracle_balance(p, v) >= 0.0) {
            verdict.voltage = v;
            return verdict;
        }
    }
    if (oracle_balance(p, p.v_min) >= 0.0) verdict.voltage = p.v_min;
    return verdict;
}

/// Static moment of a cantilevered chain, element i at lever arm i * pitch.
inline double moment_oracle(const std::vector<double>& masses, double pitch)
{
    double torque = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        torque += masses[i] * 9.81 * pitch * static_cast<double>(i + 1);
    }
    return torque;
}

}  // namespace heterosim::testing
