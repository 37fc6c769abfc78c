#pragma once

#include "heterosim/config.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace heterosim {

using ModuleId = std::string;
using ConnectionId = std::uint64_t;

/// Members of one organism, ascending by id.
using Organism = std::vector<ModuleId>;

enum class ModuleKind { Scout, Backbone, ActiveWheel, Passive };

const char* to_string(ModuleKind kind);
std::optional<ModuleKind> parse_module_kind(std::string_view name);

/// Published per-platform constants. Active platforms are fixed; Passive
/// modules are a family and take their values from PassiveParams.
struct ModuleSpec {
    ModuleKind kind = ModuleKind::Passive;
    double locomotion_speed_cm_s = 0.0;
    int num_ports = 1;
    bool has_joints = false;
    double bend_limit_deg = 0.0;      // symmetric: [-limit, +limit]
    double rotation_limit_deg = 0.0;
    double max_torque_nm = 0.0;
    double actuation_speed_deg_s = 0.0;
    double mass_kg = 0.0;
    std::int64_t compute_mips = 0;
    double battery_energy_full_wh = 0.0;
    bool can_actively_lock = false;

    bool operator==(const ModuleSpec&) const = default;
};

struct PassiveParams {
    int num_ports = 1;
    double mass_kg = 1.0;
    std::int64_t compute_mips = 0;
    double battery_energy_wh = 0.0;
    bool can_actively_lock = false;
};

/// Table lookup. Passive gets PassiveParams{} defaults.
ModuleSpec spec_for(ModuleKind kind);

/// Same table with the run's overridable constants applied (Scout torque,
/// active battery energy).
ModuleSpec spec_for(ModuleKind kind, const SimConfig& config);

ModuleSpec passive_spec(const PassiveParams& params);

/// Planar heading restricted to multiples of 90 degrees.
class Heading {
public:
    constexpr Heading() = default;
    explicit Heading(int degrees);

    constexpr int degrees() const noexcept { return degrees_; }
    Heading rotated(int degrees) const { return Heading(degrees_ + degrees); }

    bool operator==(const Heading&) const = default;

private:
    int degrees_ = 0;
};

struct Pose {
    double x = 0.0;  // m
    double y = 0.0;  // m
    Heading heading;

    bool operator==(const Pose&) const = default;
};

double distance(const Pose& a, const Pose& b);

struct Posture {
    enum class Kind { Upright, FallenOnSide };

    Kind kind = Kind::Upright;
    int ground_port = -1;  // meaningful for FallenOnSide only

    static Posture upright() { return {}; }
    static Posture fallen_on(int port) { return {Kind::FallenOnSide, port}; }
    bool is_upright() const noexcept { return kind == Kind::Upright; }

    bool operator==(const Posture&) const = default;
};

struct PortFree {
    bool operator==(const PortFree&) const = default;
};
struct PortApproaching {
    ModuleId peer;
    double remaining_m = 0.0;
    bool operator==(const PortApproaching&) const = default;
};
struct PortAligned {
    ModuleId peer;
    bool operator==(const PortAligned&) const = default;
};
struct PortLocked {
    ConnectionId connection = 0;
    bool operator==(const PortLocked&) const = default;
};
struct PortDisabled {
    bool operator==(const PortDisabled&) const = default;
};

using DockStatus = std::variant<PortFree, PortApproaching, PortAligned, PortLocked, PortDisabled>;

const char* status_name(const DockStatus& status);

struct ModuleState {
    ModuleId id;
    ModuleSpec spec;
    Pose pose;
    Posture posture;
    double joint_bend_deg = 0.0;
    double joint_rotation_deg = 0.0;
    double battery_soc = 1.0;
    bool sharing_on = true;
    double load_draw_w = 0.0;
    std::vector<DockStatus> ports;

    bool lifted = false;     // held off the ground by a lifter
    bool driving = false;    // ground-drive motor active this tick
    bool turned_over = false;  // rotated while lifted; rights itself once set down and released

    ModuleKind kind() const noexcept { return spec.kind; }
    double stored_energy_wh() const noexcept { return battery_soc * spec.battery_energy_full_wh; }
    bool can_self_locomote() const noexcept
    {
        return posture.is_upright() && !lifted && spec.locomotion_speed_cm_s > 0.0 && battery_soc > 0.0;
    }
};

/// Builds a module in its initial state: Upright, all ports Free, full battery.
ModuleState make_module(ModuleId id, ModuleKind kind, const SimConfig& config, Pose pose = {});
ModuleState make_module(ModuleId id, const ModuleSpec& spec, Pose pose = {});

/// A locked port-to-port link. Stored normalized so that (module_a, port_a)
/// orders before (module_b, port_b); orientation is measured from a to b.
struct DockConnection {
    ConnectionId id = 0;
    ModuleId module_a;
    int port_a = 0;
    ModuleId module_b;
    int port_b = 0;
    int orientation_deg = 0;
    bool locked = true;

    bool involves(const ModuleId& m) const noexcept { return module_a == m || module_b == m; }
    const ModuleId& peer_of(const ModuleId& m) const { return module_a == m ? module_b : module_a; }
    bool same_link(const DockConnection& other) const noexcept;
};

int inverse_orientation(int orientation_deg);
bool valid_orientation(int orientation_deg);

/// Running sums used to check energy conservation across a run.
struct EnergyTally {
    double load_wh = 0.0;
    double loss_wh = 0.0;
    double lock_wh = 0.0;

    bool operator==(const EnergyTally&) const = default;
};

struct World {
    SimConfig config;
    std::map<ModuleId, ModuleState> modules;
    std::map<ConnectionId, DockConnection> connections;
    ConnectionId next_connection_id = 1;
    std::int64_t tick = 0;
    EnergyTally energy;

    const ModuleState& module(const ModuleId& id) const;
    ModuleState& module(const ModuleId& id);
    bool contains(const ModuleId& id) const { return modules.count(id) != 0; }

    /// Throws if the id is already taken.
    void add_module(ModuleState state);

    double stored_energy_wh() const;
    std::vector<ConnectionId> connections_of(const ModuleId& id) const;
    std::optional<ConnectionId> find_link(const ModuleId& a, const ModuleId& b) const;
};

/// Organisms are the connected components of the docking graph. Each
/// component is sorted; components are ordered by their smallest id.
std::vector<Organism> connected_components(const World& world);

/// The component that contains `id`.
Organism organism_of(const World& world, const ModuleId& id);

std::int64_t total_compute(const World& world, const Organism& organism);

}  // namespace heterosim
