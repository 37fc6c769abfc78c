#include "heterosim/docking.hpp"

#include <set>
#include <tuple>
#include <utility>

namespace heterosim {
namespace {

const DockStatus& port_status(const ModuleState& m, int port)
{
    if (port < 0 || port >= static_cast<int>(m.ports.size())) {
        throw Error("port " + std::to_string(port) + " out of range for " + std::string(to_string(m.kind())) +
                    " '" + m.id + "' (" + std::to_string(m.ports.size()) + " ports)");
    }
    return m.ports[static_cast<std::size_t>(port)];
}

bool port_available_for(const DockStatus& status, const ModuleId& peer)
{
    if (std::holds_alternative<PortFree>(status) || std::holds_alternative<PortDisabled>(status)) return true;
    if (auto* approaching = std::get_if<PortApproaching>(&status)) return approaching->peer == peer;
    if (auto* aligned = std::get_if<PortAligned>(&status)) return aligned->peer == peer;
    return false;
}

DockConnection normalized(const DockRequest& r, ConnectionId id)
{
    DockConnection c{id, r.a, r.port_a, r.b, r.port_b, r.orientation_deg, true};
    if (std::tie(c.module_b, c.port_b) < std::tie(c.module_a, c.port_a)) {
        std::swap(c.module_a, c.module_b);
        std::swap(c.port_a, c.port_b);
        c.orientation_deg = inverse_orientation(c.orientation_deg);
    }
    return c;
}

DockStatus released_status(const ModuleState& m, int port)
{
    if (!m.posture.is_upright() && m.posture.ground_port == port) return PortDisabled{};
    return PortFree{};
}

World insert_connection(const World& world, const DockRequest& request)
{
    if (auto rejection = can_dock(world, request)) throw DockingError(*rejection);
    World next = world;
    auto connection = normalized(request, next.next_connection_id++);
    next.module(request.a).ports[static_cast<std::size_t>(request.port_a)] = PortLocked{connection.id};
    next.module(request.b).ports[static_cast<std::size_t>(request.port_b)] = PortLocked{connection.id};
    next.connections.emplace(connection.id, std::move(connection));
    return next;
}

}  // namespace

std::optional<DockRejection> can_dock(const World& world, const DockRequest& r)
{
    if (r.a == r.b) return DockRejection::SelfDock;
    const auto& a = world.module(r.a);
    const auto& b = world.module(r.b);
    const auto& status_a = port_status(a, r.port_a);
    const auto& status_b = port_status(b, r.port_b);

    if (!valid_orientation(r.orientation_deg)) return DockRejection::BadOrientation;
    if (a.kind() == ModuleKind::ActiveWheel && b.kind() == ModuleKind::ActiveWheel) {
        return DockRejection::ShapeIncompatible;
    }
    if (!a.spec.can_actively_lock && !b.spec.can_actively_lock) return DockRejection::NoActiveLocker;
    if (!port_available_for(status_a, r.b) || !port_available_for(status_b, r.a)) return DockRejection::PortBusy;
    if (std::holds_alternative<PortDisabled>(status_a) && std::holds_alternative<PortDisabled>(status_b)) {
        return DockRejection::PortBusy;
    }
    return std::nullopt;
}

bool adjacent(const World& world, const ModuleId& a, const ModuleId& b)
{
    const auto limit = world.config.module_pitch * (1.0 + world.config.misalignment_tolerance);
    return distance(world.module(a).pose, world.module(b).pose) <= limit + 1e-12;
}

double lock_energy_wh(const SimConfig& config) { return config.lock_energy_j / 3600.0; }

World dock(const World& world, const DockRequest& request)
{
    if (auto rejection = can_dock(world, request)) throw DockingError(*rejection);
    if (!adjacent(world, request.a, request.b)) {
        throw DockingError(DockRejection::NotAdjacent, "'" + request.a + "' and '" + request.b + "' are too far apart");
    }
    World next = insert_connection(world, request);

    auto& locker = next.module(request.a).spec.can_actively_lock ? next.module(request.a) : next.module(request.b);
    const double capacity = locker.spec.battery_energy_full_wh;
    if (capacity > 0.0) {
        const double paid = std::min(lock_energy_wh(next.config), locker.stored_energy_wh());
        locker.battery_soc = std::max(0.0, locker.battery_soc - paid / capacity);
        next.energy.lock_wh += paid;
    }
    return next;
}

World attach(const World& world, const DockRequest& request) { return insert_connection(world, request); }

World undock(const World& world, ConnectionId connection)
{
    auto it = world.connections.find(connection);
    if (it == world.connections.end() || !it->second.locked) {
        throw DockingError(DockRejection::NoSuchConnection, "connection " + std::to_string(connection));
    }
    World next = world;
    const auto c = it->second;
    auto& a = next.module(c.module_a);
    auto& b = next.module(c.module_b);
    a.ports[static_cast<std::size_t>(c.port_a)] = released_status(a, c.port_a);
    b.ports[static_cast<std::size_t>(c.port_b)] = released_status(b, c.port_b);
    next.connections.erase(connection);
    return next;
}

std::optional<std::string> port_consistency_error(const World& world)
{
    std::set<std::pair<ModuleId, int>> used;
    for (const auto& [cid, c] : world.connections) {
        for (const auto& [mid, port] : {std::pair{c.module_a, c.port_a}, std::pair{c.module_b, c.port_b}}) {
            if (!used.emplace(mid, port).second) {
                return "port " + mid + ":" + std::to_string(port) + " carries two connections";
            }
            const auto& m = world.module(mid);
            if (port < 0 || port >= static_cast<int>(m.ports.size())) return "connection uses invalid port";
            auto* locked = std::get_if<PortLocked>(&m.ports[static_cast<std::size_t>(port)]);
            if (locked == nullptr || locked->connection != cid) {
                return "port " + mid + ":" + std::to_string(port) + " does not reference connection " +
                       std::to_string(cid);
            }
        }
    }
    for (const auto& [mid, m] : world.modules) {
        for (std::size_t p = 0; p < m.ports.size(); ++p) {
            if (std::holds_alternative<PortLocked>(m.ports[p]) && !used.count({mid, static_cast<int>(p)})) {
                return "port " + mid + ":" + std::to_string(p) + " is Locked without a connection";
            }
        }
    }
    return std::nullopt;
}

}  // namespace heterosim
