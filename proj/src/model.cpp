#include "heterosim/model.hpp"

#include "heterosim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace heterosim {

const char* to_string(ModuleKind kind)
{
    switch (kind) {
    case ModuleKind::Scout: return "Scout";
    case ModuleKind::Backbone: return "Backbone";
    case ModuleKind::ActiveWheel: return "ActiveWheel";
    case ModuleKind::Passive: return "Passive";
    }
    return "Unknown";
}

std::optional<ModuleKind> parse_module_kind(std::string_view name)
{
    for (auto kind : {ModuleKind::Scout, ModuleKind::Backbone, ModuleKind::ActiveWheel, ModuleKind::Passive}) {
        if (name == to_string(kind)) return kind;
    }
    return std::nullopt;
}

ModuleSpec spec_for(ModuleKind kind)
{
    ModuleSpec s;
    s.kind = kind;
    switch (kind) {
    case ModuleKind::Scout:
        s.locomotion_speed_cm_s = 12.5;
        s.num_ports = 4;
        s.has_joints = true;
        s.bend_limit_deg = 90.0;
        s.rotation_limit_deg = 180.0;
        s.max_torque_nm = 4.0;
        s.actuation_speed_deg_s = 37.2;
        s.mass_kg = 1.0;
        break;
    case ModuleKind::Backbone:
        s.locomotion_speed_cm_s = 6.0;
        s.num_ports = 4;
        s.has_joints = true;
        s.bend_limit_deg = 90.0;
        s.rotation_limit_deg = 90.0;
        s.max_torque_nm = 7.0;
        s.actuation_speed_deg_s = 90.0;
        s.mass_kg = 1.0;
        break;
    case ModuleKind::ActiveWheel:
        s.locomotion_speed_cm_s = 31.0;
        s.num_ports = 2;
        s.has_joints = true;
        s.bend_limit_deg = 180.0;
        s.rotation_limit_deg = 180.0;
        s.max_torque_nm = 5.0;
        s.actuation_speed_deg_s = 50.0;
        s.mass_kg = 1.55;
        break;
    case ModuleKind::Passive:
        return passive_spec(PassiveParams{});
    }
    s.compute_mips = 3100;
    s.battery_energy_full_wh = 33.0;
    s.can_actively_lock = true;
    return s;
}

ModuleSpec spec_for(ModuleKind kind, const SimConfig& config)
{
    ModuleSpec s = spec_for(kind);
    if (kind == ModuleKind::Passive) return s;
    s.battery_energy_full_wh = config.battery_energy_wh;
    if (kind == ModuleKind::Scout) s.max_torque_nm = config.scout_max_torque_nm;
    return s;
}

ModuleSpec passive_spec(const PassiveParams& params)
{
    if (params.num_ports < 1) throw ValidationError("passive.ports", "a passive module needs at least one port");
    if (!(params.mass_kg >= 0.0) || params.compute_mips < 0 || !(params.battery_energy_wh >= 0.0)) {
        throw ValidationError("passive", "mass, compute and energy must be non-negative");
    }
    ModuleSpec s;
    s.kind = ModuleKind::Passive;
    s.num_ports = params.num_ports;
    s.mass_kg = params.mass_kg;
    s.compute_mips = params.compute_mips;
    s.battery_energy_full_wh = params.battery_energy_wh;
    s.can_actively_lock = params.can_actively_lock;
    return s;
}

Heading::Heading(int degrees)
{
    if (degrees % 90 != 0) throw Error("heading must be a multiple of 90 degrees, got " + std::to_string(degrees));
    degrees_ = ((degrees % 360) + 360) % 360;
}

double distance(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

const char* status_name(const DockStatus& status)
{
    struct Visitor {
        const char* operator()(const PortFree&) const { return "Free"; }
        const char* operator()(const PortApproaching&) const { return "Approaching"; }
        const char* operator()(const PortAligned&) const { return "Aligned"; }
        const char* operator()(const PortLocked&) const { return "Locked"; }
        const char* operator()(const PortDisabled&) const { return "Disabled"; }
    };
    return std::visit(Visitor{}, status);
}

ModuleState make_module(ModuleId id, ModuleKind kind, const SimConfig& config, Pose pose)
{
    return make_module(std::move(id), spec_for(kind, config), pose);
}

ModuleState make_module(ModuleId id, const ModuleSpec& spec, Pose pose)
{
    if (id.empty()) throw ValidationError("module.id", "module id must not be empty");
    ModuleState m;
    m.id = std::move(id);
    m.spec = spec;
    m.pose = pose;
    m.battery_soc = spec.battery_energy_full_wh > 0.0 ? 1.0 : 0.0;
    m.sharing_on = true;
    m.ports.assign(static_cast<std::size_t>(spec.num_ports), PortFree{});
    return m;
}

bool DockConnection::same_link(const DockConnection& other) const noexcept
{
    if (module_a == other.module_a && port_a == other.port_a && module_b == other.module_b &&
        port_b == other.port_b) {
        return orientation_deg == other.orientation_deg;
    }
    return module_a == other.module_b && port_a == other.port_b && module_b == other.module_a &&
           port_b == other.port_a && orientation_deg == inverse_orientation(other.orientation_deg);
}

int inverse_orientation(int orientation_deg) { return ((360 - orientation_deg % 360) % 360 + 360) % 360; }

bool valid_orientation(int orientation_deg)
{
    return orientation_deg == 0 || orientation_deg == 90 || orientation_deg == 180 || orientation_deg == 270;
}

const ModuleState& World::module(const ModuleId& id) const
{
    auto it = modules.find(id);
    if (it == modules.end()) throw Error("unknown module '" + id + "'");
    return it->second;
}

ModuleState& World::module(const ModuleId& id)
{
    auto it = modules.find(id);
    if (it == modules.end()) throw Error("unknown module '" + id + "'");
    return it->second;
}

void World::add_module(ModuleState state)
{
    auto id = state.id;
    if (!modules.emplace(id, std::move(state)).second) {
        throw ValidationError("module." + id, "duplicate module id");
    }
}

double World::stored_energy_wh() const
{
    double total = 0.0;
    for (const auto& [id, m] : modules) total += m.stored_energy_wh();
    return total;
}

std::vector<ConnectionId> World::connections_of(const ModuleId& id) const
{
    std::vector<ConnectionId> out;
    for (const auto& [cid, c] : connections) {
        if (c.involves(id)) out.push_back(cid);
    }
    return out;
}

std::optional<ConnectionId> World::find_link(const ModuleId& a, const ModuleId& b) const
{
    for (const auto& [cid, c] : connections) {
        if ((c.module_a == a && c.module_b == b) || (c.module_a == b && c.module_b == a)) return cid;
    }
    return std::nullopt;
}

namespace {

struct DisjointSets {
    explicit DisjointSets(std::size_t n) : parent(n), rank(n, 0) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank[a] < rank[b]) std::swap(a, b);
        parent[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
    }

    std::vector<std::size_t> parent;
    std::vector<int> rank;
};

}  // namespace

std::vector<Organism> connected_components(const World& world)
{
    std::vector<ModuleId> ids;
    ids.reserve(world.modules.size());
    std::map<ModuleId, std::size_t> index;
    for (const auto& [id, m] : world.modules) {
        index.emplace(id, ids.size());
        ids.push_back(id);
    }

    DisjointSets sets(ids.size());
    for (const auto& [cid, c] : world.connections) {
        sets.unite(index.at(c.module_a), index.at(c.module_b));
    }

    // ids are already ascending, so first-seen order of roots orders the
    // components by their smallest member.
    std::map<std::size_t, std::size_t> slot_of_root;
    std::vector<Organism> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto root = sets.find(i);
        auto [it, inserted] = slot_of_root.emplace(root, out.size());
        if (inserted) out.emplace_back();
        out[it->second].push_back(ids[i]);
    }
    return out;
}

Organism organism_of(const World& world, const ModuleId& id)
{
    if (!world.contains(id)) throw Error("unknown module '" + id + "'");
    for (auto& organism : connected_components(world)) {
        if (std::binary_search(organism.begin(), organism.end(), id)) return organism;
    }
    return {id};
}

std::int64_t total_compute(const World& world, const Organism& organism)
{
    std::int64_t total = 0;
    for (const auto& id : organism) total += world.module(id).spec.compute_mips;
    return total;
}

}  // namespace heterosim
