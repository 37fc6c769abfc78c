#include "heterosim/scenario.hpp"

#include "heterosim/error.hpp"
#include "heterosim/powerbus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace heterosim {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Unit vector for a 90-degree-quantized heading.
std::pair<double, double> heading_vector(const Heading& h)
{
    switch (h.degrees()) {
    case 90: return {0.0, 1.0};
    case 180: return {-1.0, 0.0};
    case 270: return {0.0, -1.0};
    default: return {1.0, 0.0};
    }
}

bool valid_turn(int degrees) { return degrees == 90 || degrees == -90 || degrees == 180 || degrees == -180; }

double rounded_time(std::int64_t tick, double dt) { return std::round(static_cast<double>(tick) * dt * 1e9) / 1e9; }

DockStatus released_port(const ModuleState& m, int port)
{
    if (!m.posture.is_upright() && m.posture.ground_port == port) return PortDisabled{};
    return PortFree{};
}

}  // namespace

const char* directive_name(const Directive& directive)
{
    return std::visit(Overloaded{
                          [](const Move&) { return "Move"; },
                          [](const Turn&) { return "Turn"; },
                          [](const DockWith&) { return "DockWith"; },
                          [](const Undock&) { return "Undock"; },
                          [](const ActuateJoint&) { return "ActuateJoint"; },
                          [](const SetSharing&) { return "SetSharing"; },
                          [](const LiftChain&) { return "LiftChain"; },
                          [](const LowerChain&) { return "LowerChain"; },
                          [](const Broadcast&) { return "Broadcast"; },
                          [](const SendWired&) { return "SendWired"; },
                          [](const Wait&) { return "Wait"; },
                      },
                      directive);
}

const char* to_string(ActionKind kind)
{
    switch (kind) {
    case ActionKind::TrackDrive: return "TrackDrive";
    case ActionKind::ScrewDrive: return "ScrewDrive";
    case ActionKind::OmniDrive: return "OmniDrive";
    case ActionKind::OmniRotate: return "OmniRotate";
    case ActionKind::PivotTurn: return "PivotTurn";
    case ActionKind::DockHandshake: return "DockHandshake";
    case ActionKind::Release: return "Release";
    case ActionKind::JointActuation: return "JointActuation";
    case ActionKind::SharingSwitch: return "SharingSwitch";
    case ActionKind::ChainLift: return "ChainLift";
    case ActionKind::ChainLower: return "ChainLower";
    case ActionKind::WirelessSend: return "WirelessSend";
    case ActionKind::WiredSend: return "WiredSend";
    case ActionKind::Idle: return "Idle";
    }
    return "Unknown";
}

const char* to_string(BuiltinExperiment builtin)
{
    switch (builtin) {
    case BuiltinExperiment::None: return "none";
    case BuiltinExperiment::Assembly: return "assembly";
    case BuiltinExperiment::Rescue: return "rescue";
    }
    return "unknown";
}

std::int64_t ticks_for(double duration_s, double dt)
{
    if (!(duration_s > 0.0)) return 0;
    return static_cast<std::int64_t>(std::ceil(duration_s / dt - 1e-9));
}

ConcreteAction dispatch(ModuleKind kind, const Directive& directive, const SimConfig& config)
{
    const auto spec = spec_for(kind, config);
    auto unsupported = [&](const std::string& why) {
        return UnsupportedDirective(std::string(directive_name(directive)) + " on " + to_string(kind) + ": " + why);
    };
    auto need_joints = [&] {
        if (!spec.has_joints) throw unsupported("platform has no actuated joints");
    };

    return std::visit(
        Overloaded{
            [&](const Move& move) -> ConcreteAction {
                if (spec.locomotion_speed_cm_s <= 0.0) throw unsupported("platform has no locomotion");
                if (!std::isfinite(move.distance_m)) throw unsupported("distance must be finite");
                ActionKind drive = kind == ModuleKind::Scout      ? ActionKind::TrackDrive
                                   : kind == ModuleKind::Backbone ? ActionKind::ScrewDrive
                                                                  : ActionKind::OmniDrive;
                return {drive, spec.locomotion_speed_cm_s,
                        std::abs(move.distance_m) / (spec.locomotion_speed_cm_s / 100.0)};
            },
            [&](const Turn& turn) -> ConcreteAction {
                if (spec.locomotion_speed_cm_s <= 0.0) throw unsupported("platform has no locomotion");
                if (!valid_turn(turn.degrees)) throw unsupported("turns are +-90 or +-180 degrees");
                if (kind == ModuleKind::ActiveWheel) return {ActionKind::OmniRotate, 0.0, 0.0};
                return {ActionKind::PivotTurn, spec.actuation_speed_deg_s,
                        std::abs(turn.degrees) / spec.actuation_speed_deg_s};
            },
            [&](const DockWith&) -> ConcreteAction {
                return {ActionKind::DockHandshake, 0.0, config.lock_duration_s};
            },
            [&](const Undock&) -> ConcreteAction { return {ActionKind::Release, 0.0, 0.0}; },
            [&](const ActuateJoint& joint) -> ConcreteAction {
                need_joints();
                if (!std::isfinite(joint.target_deg)) throw unsupported("target must be finite");
                return {ActionKind::JointActuation, spec.actuation_speed_deg_s, std::nullopt};
            },
            [&](const SetSharing&) -> ConcreteAction { return {ActionKind::SharingSwitch, 0.0, 0.0}; },
            [&](const LiftChain&) -> ConcreteAction {
                need_joints();
                return {ActionKind::ChainLift, spec.actuation_speed_deg_s, kLiftBendDeg / spec.actuation_speed_deg_s};
            },
            [&](const LowerChain&) -> ConcreteAction {
                need_joints();
                return {ActionKind::ChainLower, spec.actuation_speed_deg_s, kLiftBendDeg / spec.actuation_speed_deg_s};
            },
            [&](const Broadcast&) -> ConcreteAction { return {ActionKind::WirelessSend, 0.0, 0.0}; },
            [&](const SendWired&) -> ConcreteAction { return {ActionKind::WiredSend, 0.0, 0.0}; },
            [&](const Wait& wait) -> ConcreteAction {
                if (wait.ticks < 0) throw unsupported("tick count must be >= 0");
                return {ActionKind::Idle, 0.0, static_cast<double>(wait.ticks) * config.dt};
            },
        },
        directive);
}

// ---------------------------------------------------------------------------

const EventValue* Event::find(const std::string& key) const
{
    for (const auto& [k, v] : data) {
        if (k == key) return &v;
    }
    return nullptr;
}

void EventLog::append(Event event)
{
    if (!events_.empty() && event.tick < events_.back().tick) {
        throw Error("event log must be appended in tick order");
    }
    events_.push_back(std::move(event));
}

std::vector<const Event*> EventLog::of_type(const std::string& type) const
{
    std::vector<const Event*> out;
    for (const auto& e : events_) {
        if (e.type == type) out.push_back(&e);
    }
    return out;
}

const SensorReading& SensorMemory::at(const ModuleId& id) const
{
    auto it = readings.find(id);
    if (it == readings.end()) throw Error("no sensor reading for '" + id + "'");
    return it->second;
}

// ---------------------------------------------------------------------------

void validate_script(ScenarioScript& script)
{
    validate(script.config);

    std::map<ModuleId, ModuleSpec> specs;
    for (std::size_t i = 0; i < script.modules.size(); ++i) {
        const auto& m = script.modules[i];
        const auto entry = "modules[" + std::to_string(i) + "]";
        if (m.id.empty()) throw ValidationError(entry + ".id", "must not be empty");
        if (m.passive && m.kind != ModuleKind::Passive) {
            throw ValidationError(entry + ".passive", "only Passive modules take passive parameters");
        }
        auto spec = m.kind == ModuleKind::Passive ? passive_spec(m.passive.value_or(PassiveParams{}))
                                                  : spec_for(m.kind, script.config);
        if (!(m.soc >= 0.0 && m.soc <= 1.0)) throw ValidationError(entry + ".soc", "must be in [0, 1]");
        if (!m.posture.is_upright() && (m.posture.ground_port < 0 || m.posture.ground_port >= spec.num_ports)) {
            throw ValidationError(entry + ".fallen_on", "port out of range for " + std::string(to_string(m.kind)) +
                                                            " (" + std::to_string(spec.num_ports) + " ports)");
        }
        if (!specs.emplace(m.id, spec).second) throw ValidationError(entry + ".id", "duplicate module id '" + m.id + "'");
    }

    auto require_module = [&](const std::string& entry, const ModuleId& id) -> const ModuleSpec& {
        auto it = specs.find(id);
        if (it == specs.end()) throw ValidationError(entry, "unknown module '" + id + "'");
        return it->second;
    };
    auto require_port = [&](const std::string& entry, const ModuleId& id, int port) {
        const auto& spec = require_module(entry, id);
        if (port < 0 || port >= spec.num_ports) {
            throw ValidationError(entry, "port " + std::to_string(port) + " out of range for " +
                                             std::string(to_string(spec.kind)) + " '" + id + "' (" +
                                             std::to_string(spec.num_ports) + " ports)");
        }
    };

    for (std::size_t i = 0; i < script.connections.size(); ++i) {
        const auto& c = script.connections[i];
        const auto entry = "connections[" + std::to_string(i) + "]";
        require_port(entry + ".port_a", c.a, c.port_a);
        require_port(entry + ".port_b", c.b, c.port_b);
    }

    for (std::size_t i = 0; i < script.timeline.size(); ++i) {
        const auto& t = script.timeline[i];
        const auto entry = "timeline[" + std::to_string(i) + "]";
        if (t.tick < 0) throw ValidationError(entry + ".tick", "must be >= 0");
        require_module(entry + ".module", t.module);
        std::visit(Overloaded{
                       [&](const DockWith& d) {
                           require_port(entry + ".port", t.module, d.port);
                           require_port(entry + ".peer_port", d.peer, d.peer_port);
                       },
                       [&](const Undock& u) { require_port(entry + ".port", t.module, u.port); },
                       [&](const Turn& turn) {
                           if (!valid_turn(turn.degrees)) {
                               throw ValidationError(entry + ".degrees", "turns are +-90 or +-180 degrees");
                           }
                       },
                       [&](const Move& move) {
                           if (!std::isfinite(move.distance_m)) {
                               throw ValidationError(entry + ".distance", "must be finite");
                           }
                       },
                       [&](const LiftChain& lift) {
                           if (lift.chain.empty()) throw ValidationError(entry + ".chain", "must not be empty");
                           for (const auto& id : lift.chain) require_module(entry + ".chain", id);
                       },
                       [&](const SendWired& send) { require_module(entry + ".dst", send.dst); },
                       [&](const Wait& wait) {
                           if (wait.ticks < 0) throw ValidationError(entry + ".ticks", "must be >= 0");
                       },
                       [](const auto&) {},
                   },
                   t.directive);
    }

    std::stable_sort(script.timeline.begin(), script.timeline.end(), [](const auto& l, const auto& r) {
        return std::tie(l.tick, l.module) < std::tie(r.tick, r.module);
    });
    for (std::size_t i = 1; i < script.timeline.size(); ++i) {
        const auto& prev = script.timeline[i - 1];
        const auto& cur = script.timeline[i];
        if (prev.tick == cur.tick && prev.module == cur.module) {
            throw ValidationError("timeline", "duplicate entry for module '" + cur.module + "' at tick " +
                                                  std::to_string(cur.tick));
        }
    }

    auto count = [&](auto pred) {
        return std::count_if(script.modules.begin(), script.modules.end(), pred);
    };
    if (script.builtin == BuiltinExperiment::Assembly) {
        if (count([](const auto& m) { return m.kind == ModuleKind::ActiveWheel; }) < 2 ||
            count([](const auto& m) { return m.kind == ModuleKind::Backbone; }) < 2) {
            throw ValidationError("builtin", "assembly needs at least 2 ActiveWheel and 2 Backbone modules");
        }
    }
    if (script.builtin == BuiltinExperiment::Rescue) {
        if (count([](const auto& m) { return m.kind == ModuleKind::Backbone && !m.posture.is_upright(); }) < 1 ||
            count([](const auto& m) { return m.kind == ModuleKind::ActiveWheel; }) < 1) {
            throw ValidationError("builtin", "rescue needs a fallen Backbone and at least one ActiveWheel");
        }
    }
}

World build_world(const ScenarioScript& script)
{
    World world;
    world.config = script.config;
    for (const auto& setup : script.modules) {
        auto spec = setup.kind == ModuleKind::Passive ? passive_spec(setup.passive.value_or(PassiveParams{}))
                                                      : spec_for(setup.kind, script.config);
        auto m = make_module(setup.id, spec, setup.pose);
        m.battery_soc = spec.battery_energy_full_wh > 0.0 ? setup.soc : 0.0;
        m.sharing_on = setup.sharing_on;
        world.add_module(std::move(m));
        if (!setup.posture.is_upright()) world = set_posture(world, setup.id, setup.posture);
    }
    for (std::size_t i = 0; i < script.connections.size(); ++i) {
        try {
            world = attach(world, script.connections[i]);
        } catch (const DockingError& e) {
            throw ValidationError("connections[" + std::to_string(i) + "]", e.what());
        }
    }
    return world;
}

// ---------------------------------------------------------------------------

Engine::Engine(World world, std::vector<TimelineEntry> timeline, std::unique_ptr<Controller> controller,
               ShedPolicy shedding)
    : world_(std::move(world)),
      timeline_(std::move(timeline)),
      controller_(std::move(controller)),
      shedding_(shedding),
      rng_(world_.config.seed)
{
    validate(world_.config);
    std::stable_sort(timeline_.begin(), timeline_.end(), [](const auto& l, const auto& r) {
        return std::tie(l.tick, l.module) < std::tie(r.tick, r.module);
    });
    refresh_sensors();
    sensors_.observed_tick = world_.tick - 1;
}

bool Engine::finished() const
{
    if (controller_) return controller_->status() != ControllerStatus::Running;
    return timeline_cursor_ >= timeline_.size() && activities_.empty() && outbox_.empty() &&
           pending_undocks_.empty();
}

bool Engine::busy(const ModuleId& id) const { return activities_.count(id) != 0; }

const std::vector<ModuleId>* Engine::held_chain(const ModuleId& lifter) const
{
    auto it = held_chains_.find(lifter);
    return it == held_chains_.end() ? nullptr : &it->second;
}

void Engine::run()
{
    while (!halted_ && !finished() && world_.tick < world_.config.max_ticks) step();
}

std::vector<Event> Engine::step(std::vector<Command> pending)
{
    if (halted_) return {};
    tick_events_.clear();
    rejections_.clear();
    inbox_.clear();
    const auto tick = world_.tick;

    // (1) controller reads of sensor memory
    std::vector<Command> from_controller;
    if (controller_ && controller_->status() == ControllerStatus::Running) {
        std::vector<Annotation> notes;
        from_controller = controller_->decide(sensors_, tick, notes);
        for (auto& note : notes) emit(std::move(note.type), std::move(note.subjects), std::move(note.data));
    }
    phase_marker(1, "sense");

    // (2) dispatch in module id order
    std::vector<Command> commands;
    while (timeline_cursor_ < timeline_.size() && timeline_[timeline_cursor_].tick <= tick) {
        const auto& entry = timeline_[timeline_cursor_++];
        if (entry.tick == tick) commands.push_back({entry.module, entry.directive});
    }
    for (auto& c : pending) commands.push_back(std::move(c));
    for (auto& c : from_controller) commands.push_back(std::move(c));
    std::stable_sort(commands.begin(), commands.end(),
                     [](const Command& l, const Command& r) { return l.module < r.module; });
    phase_marker(2, "dispatch");
    for (const auto& command : commands) dispatch_command(command);

    phase_marker(3, "motion");
    integrate_motion();
    phase_marker(4, "docking");
    docking_transitions();
    phase_marker(5, "power");
    power_step();
    phase_marker(6, "comm");
    deliver_messages();
    phase_marker(7, "sensors");
    refresh_sensors();
    phase_marker(8, "events");

    for (const auto& e : tick_events_) log_.append(e);
    ++world_.tick;
    return std::move(tick_events_);
}

void Engine::emit(std::string type, std::vector<ModuleId> subjects, std::vector<std::pair<std::string, EventValue>> data)
{
    tick_events_.push_back(
        {world_.tick, rounded_time(world_.tick, world_.config.dt), std::move(type), std::move(subjects), std::move(data)});
}

void Engine::phase_marker(int phase, const char* name)
{
    if (world_.config.trace_phases) emit("Phase", {}, {{"phase", std::int64_t{phase}}, {"name", std::string(name)}});
}

void Engine::reject(const ModuleId& module, const std::string& directive, const std::string& reason)
{
    rejections_[module].push_back(reason);
    emit("DirectiveRejected", {module}, {{"directive", directive}, {"reason", reason}});
}

std::int64_t Engine::activity_end(double duration_s) const
{
    const auto ticks = ticks_for(duration_s, world_.config.dt);
    return world_.tick + std::max<std::int64_t>(ticks, 1) - 1;
}

void Engine::dispatch_command(const Command& command)
{
    const auto& id = command.module;
    const std::string name = directive_name(command.directive);
    if (!world_.contains(id)) {
        reject(id, name, "UnknownModule");
        return;
    }
    ConcreteAction action;
    try {
        action = dispatch(world_.module(id).kind(), command.directive, world_.config);
    } catch (const UnsupportedDirective&) {
        reject(id, name, "UnsupportedDirective");
        return;
    }

    const bool instantaneous = std::holds_alternative<SetSharing>(command.directive) ||
                               std::holds_alternative<Broadcast>(command.directive) ||
                               std::holds_alternative<SendWired>(command.directive) ||
                               std::holds_alternative<Undock>(command.directive);
    if (!instantaneous && busy(id)) {
        reject(id, name, "Busy");
        return;
    }

    std::visit(Overloaded{
                   [&](const Move& move) { start_move(id, move); },
                   [&](const Turn& turn) { start_turn(id, turn, action); },
                   [&](const DockWith& dock) { start_dock(id, dock); },
                   [&](const Undock& undock) {
                       const auto& m = world_.module(id);
                       if (undock.port < 0 || undock.port >= static_cast<int>(m.ports.size()) ||
                           !std::holds_alternative<PortLocked>(m.ports[static_cast<std::size_t>(undock.port)])) {
                           reject(id, name, "NoSuchConnection");
                           return;
                       }
                       pending_undocks_.emplace_back(id, undock.port);
                   },
                   [&](const ActuateJoint& joint) { start_joint(id, joint); },
                   [&](const SetSharing& sharing) {
                       world_.module(id).sharing_on = sharing.on;
                       emit("SharingSet", {id}, {{"on", sharing.on}});
                   },
                   [&](const LiftChain& lift) { start_lift(id, lift); },
                   [&](const LowerChain&) { start_lower(id); },
                   [&](const Broadcast& broadcast) { send_broadcast(id, broadcast); },
                   [&](const SendWired& send) { send_wired(id, send); },
                   [&](const Wait& wait) {
                       Activity activity;
                       activity.kind = Activity::Kind::Wait;
                       activity.end_tick = world_.tick + std::max<std::int64_t>(wait.ticks, 1) - 1;
                       activities_[id] = activity;
                   },
               },
               command.directive);
}

void Engine::start_move(const ModuleId& id, const Move& move)
{
    const auto& m = world_.module(id);
    if (!m.can_self_locomote()) {
        reject(id, "Move", "CannotDrive");
        return;
    }
    const auto organism = organism_of(world_, id);
    for (const auto& member : organism) {
        auto it = activities_.find(member);
        if (it != activities_.end() && it->second.kind == Activity::Kind::Drive) {
            reject(id, "Move", "Busy");
            return;
        }
    }
    const double speed = organism_speed(world_, organism);
    if (speed <= 0.0) {
        reject(id, "Move", "CannotDrive");
        return;
    }
    auto [dx, dy] = heading_vector(m.pose.heading);
    const double sign = move.distance_m < 0.0 ? -1.0 : 1.0;
    Activity activity;
    activity.kind = Activity::Kind::Drive;
    activity.remaining_m = std::abs(move.distance_m);
    activity.dir_x = sign * dx;
    activity.dir_y = sign * dy;
    activities_[id] = activity;
    emit("MoveStart", {id},
         {{"distance", move.distance_m},
          {"speed", speed},
          {"ticks", ticks_for(std::abs(move.distance_m) / (speed / 100.0), world_.config.dt)}});
}

void Engine::start_turn(const ModuleId& id, const Turn& turn, const ConcreteAction& action)
{
    const auto& m = world_.module(id);
    if (!m.can_self_locomote()) {
        reject(id, "Turn", "CannotDrive");
        return;
    }
    if (!world_.connections_of(id).empty()) {
        reject(id, "Turn", "OrganismTurnUnsupported");
        return;
    }
    Activity activity;
    activity.kind = Activity::Kind::Turn;
    activity.turn_degrees = turn.degrees;
    activity.end_tick = activity_end(action.duration_s.value_or(0.0));
    activities_[id] = activity;
    emit("TurnStart", {id}, {{"degrees", std::int64_t{turn.degrees}}, {"action", std::string(to_string(action.kind))}});
}

void Engine::start_dock(const ModuleId& id, const DockWith& dock)
{
    if (!world_.contains(dock.peer)) {
        reject(id, "DockWith", "UnknownModule");
        return;
    }
    const DockRequest request{id, dock.port, dock.peer, dock.peer_port, dock.orientation_deg};
    auto dock_reject = [&](const std::string& reason) {
        rejections_[id].push_back(reason);
        emit("DockRejected", {id, dock.peer}, {{"reason", reason}});
    };

    std::optional<DockRejection> rejection;
    try {
        rejection = can_dock(world_, request);
    } catch (const Error&) {
        reject(id, "DockWith", "InvalidPort");
        return;
    }
    if (rejection) {
        dock_reject(to_string(*rejection));
        return;
    }
    auto& self = world_.module(id);
    auto& peer = world_.module(dock.peer);
    auto& own_port = self.ports[static_cast<std::size_t>(dock.port)];
    auto& peer_port = peer.ports[static_cast<std::size_t>(dock.peer_port)];
    if (std::holds_alternative<PortDisabled>(own_port)) {
        // a face lying on the ground cannot initiate
        dock_reject(to_string(DockRejection::PortBusy));
        return;
    }

    Activity activity;
    activity.dock = dock;
    if (adjacent(world_, id, dock.peer)) {
        own_port = PortAligned{dock.peer};
        if (!std::holds_alternative<PortDisabled>(peer_port)) peer_port = PortAligned{id};
        activity.kind = Activity::Kind::Handshake;
        activity.end_tick = activity_end(world_.config.lock_duration_s);
        activities_[id] = activity;
        emit("Aligned", {id, dock.peer});
        return;
    }
    if (!self.can_self_locomote() || !world_.connections_of(id).empty()) {
        dock_reject(to_string(DockRejection::NotAdjacent));
        return;
    }
    const double gap = distance(self.pose, peer.pose) - world_.config.module_pitch;
    own_port = PortApproaching{dock.peer, gap};
    if (!std::holds_alternative<PortDisabled>(peer_port)) peer_port = PortApproaching{id, gap};
    activity.kind = Activity::Kind::Approach;
    activity.remaining_m = gap;
    activities_[id] = activity;
    emit("ApproachStart", {id, dock.peer}, {{"distance", gap}});
}

void Engine::start_joint(const ModuleId& id, const ActuateJoint& joint)
{
    const auto* chain = held_chain(id);
    JointMotion motion;
    try {
        motion = actuate_joint(world_, id, joint.joint, joint.target_deg,
                               chain ? std::span<const ModuleId>(*chain) : std::span<const ModuleId>{});
    } catch (const MechanicsError& e) {
        reject(id, "ActuateJoint", to_string(e.fault()));
        return;
    }
    Activity activity;
    activity.kind = Activity::Kind::Joint;
    activity.joint = joint.joint;
    activity.target_deg = motion.target_deg;
    activity.end_tick = activity_end(motion.duration_s);
    activities_[id] = activity;
    emit(joint.joint == Joint::Rotation ? "RotateStart" : "BendStart", {id},
         {{"target", motion.target_deg}, {"duration", motion.duration_s}});
}

void Engine::start_lift(const ModuleId& id, const LiftChain& lift)
{
    const auto& m = world_.module(id);
    if (held_chain(id) != nullptr) {
        reject(id, "LiftChain", "AlreadyHolding");
        return;
    }
    if (m.lifted || !m.posture.is_upright()) {
        reject(id, "LiftChain", "CannotLift");
        return;
    }
    LiftVerdict verdict;
    try {
        verdict = lift_feasible(world_, {id, Joint::Bend, lift.chain, {}});
    } catch (const MechanicsError& e) {
        reject(id, "LiftChain", to_string(e.fault()));
        return;
    } catch (const Error&) {
        reject(id, "LiftChain", "InvalidChain");
        return;
    }
    if (!verdict.feasible) {
        rejections_[id].push_back(to_string(MechanicsFault::TorqueExceeded));
        emit("DirectiveRejected", {id},
             {{"directive", std::string("LiftChain")},
              {"reason", std::string(to_string(MechanicsFault::TorqueExceeded))},
              {"required_nm", verdict.required_nm},
              {"available_nm", verdict.available_nm}});
        return;
    }
    Activity activity;
    activity.kind = Activity::Kind::Lift;
    activity.end_tick = activity_end(std::abs(kLiftBendDeg - m.joint_bend_deg) / m.spec.actuation_speed_deg_s);
    activities_[id] = activity;
    held_chains_[id] = lift.chain;
    std::vector<ModuleId> subjects{id};
    subjects.insert(subjects.end(), lift.chain.begin(), lift.chain.end());
    emit("LiftStart", std::move(subjects),
         {{"required_nm", verdict.required_nm}, {"available_nm", verdict.available_nm}});
}

void Engine::start_lower(const ModuleId& id)
{
    const auto* chain = held_chain(id);
    if (chain == nullptr) {
        reject(id, "LowerChain", "NotHolding");
        return;
    }
    const auto& m = world_.module(id);
    Activity activity;
    activity.kind = Activity::Kind::Lower;
    activity.end_tick = activity_end(std::abs(m.joint_bend_deg) / m.spec.actuation_speed_deg_s);
    activities_[id] = activity;
    std::vector<ModuleId> subjects{id};
    subjects.insert(subjects.end(), chain->begin(), chain->end());
    emit("LowerStart", std::move(subjects));
}

void Engine::send_broadcast(const ModuleId& id, const Broadcast& broadcast)
{
    std::set<ModuleId> receivers;
    try {
        receivers = wireless_broadcast(world_, id, broadcast.payload, &rng_);
    } catch (const DeadBatteryError&) {
        reject(id, "Broadcast", "DeadBattery");
        return;
    }
    std::vector<ModuleId> subjects{id};
    for (const auto& r : receivers) {
        outbox_.push_back({world_.tick, r, Message{id, broadcast.payload, WirelessBroadcast{}}});
        subjects.push_back(r);
    }
    emit("Broadcast", std::move(subjects),
         {{"payload", broadcast.payload}, {"receivers", static_cast<std::int64_t>(receivers.size())}});
}

void Engine::send_wired(const ModuleId& id, const SendWired& send)
{
    if (!world_.contains(send.dst)) {
        reject(id, "SendWired", "UnknownModule");
        return;
    }
    auto delivery = wired_deliver(world_, id, send.dst);
    if (!delivery.delivered()) {
        rejections_[id].push_back("Undeliverable");
        emit("WiredUndeliverable", {id, send.dst});
        return;
    }
    const auto latency = delivery.latency_ticks(world_.config);
    outbox_.push_back({world_.tick + latency, send.dst, Message{id, send.payload, WiredTo{send.dst}}});
    emit("WiredSend", {id, send.dst}, {{"hops", std::int64_t{*delivery.hops}}, {"latency_ticks", latency}});
}

void Engine::integrate_motion()
{
    for (auto& [id, m] : world_.modules) m.driving = false;
    const double dt = world_.config.dt;
    const auto tick = world_.tick;

    std::vector<ModuleId> done;
    for (auto& [id, activity] : activities_) {
        auto& m = world_.module(id);
        switch (activity.kind) {
        case Activity::Kind::Drive: {
            const auto organism = organism_of(world_, id);
            const double speed = organism_speed(world_, organism);
            if (speed <= 0.0 || !m.can_self_locomote()) {
                emit("MoveAborted", {id}, {{"reason", std::string("CannotDrive")}});
                done.push_back(id);
                break;
            }
            const double advance = std::min(activity.remaining_m, speed / 100.0 * dt);
            for (const auto& member : organism) {
                auto& other = world_.module(member);
                other.pose.x += activity.dir_x * advance;
                other.pose.y += activity.dir_y * advance;
                if (other.can_self_locomote()) other.driving = true;
            }
            activity.remaining_m -= advance;
            if (activity.remaining_m <= 1e-12) {
                emit("MoveDone", {id}, {{"x", m.pose.x}, {"y", m.pose.y}});
                done.push_back(id);
            }
            break;
        }
        case Activity::Kind::Approach: {
            auto& peer = world_.module(activity.dock.peer);
            if (!m.can_self_locomote()) {
                for (auto* side : {&m, &peer}) {
                    const int port = side == &m ? activity.dock.port : activity.dock.peer_port;
                    auto& status = side->ports[static_cast<std::size_t>(port)];
                    if (std::holds_alternative<PortApproaching>(status)) status = released_port(*side, port);
                }
                emit("DockAborted", {id, activity.dock.peer}, {{"reason", std::string("CannotDrive")}});
                done.push_back(id);
                break;
            }
            double ux = m.pose.x - peer.pose.x;
            double uy = m.pose.y - peer.pose.y;
            const double norm = std::hypot(ux, uy);
            if (norm < 1e-12) {
                ux = -1.0;
                uy = 0.0;
            } else {
                ux /= norm;
                uy /= norm;
            }
            const double tx = peer.pose.x + ux * world_.config.module_pitch;
            const double ty = peer.pose.y + uy * world_.config.module_pitch;
            const double gap = std::hypot(tx - m.pose.x, ty - m.pose.y);
            const double advance = std::min(gap, m.spec.locomotion_speed_cm_s / 100.0 * dt);
            if (gap > 0.0) {
                m.pose.x += (tx - m.pose.x) / gap * advance;
                m.pose.y += (ty - m.pose.y) / gap * advance;
            }
            m.driving = true;
            const double remaining = gap - advance;
            activity.remaining_m = remaining;
            auto& own_port = m.ports[static_cast<std::size_t>(activity.dock.port)];
            auto& peer_port = peer.ports[static_cast<std::size_t>(activity.dock.peer_port)];
            if (remaining <= 1e-9) {
                m.pose.x = tx;
                m.pose.y = ty;
                own_port = PortAligned{activity.dock.peer};
                if (!std::holds_alternative<PortDisabled>(peer_port)) peer_port = PortAligned{id};
                activity.kind = Activity::Kind::Handshake;
                activity.end_tick = activity_end(world_.config.lock_duration_s);
                emit("Aligned", {id, activity.dock.peer});
            } else {
                own_port = PortApproaching{activity.dock.peer, remaining};
                if (!std::holds_alternative<PortDisabled>(peer_port)) peer_port = PortApproaching{id, remaining};
            }
            break;
        }
        case Activity::Kind::Turn:
            if (activity.end_tick <= tick) {
                m.pose.heading = m.pose.heading.rotated(activity.turn_degrees);
                emit("TurnDone", {id}, {{"heading", std::int64_t{m.pose.heading.degrees()}}});
                done.push_back(id);
            }
            break;
        case Activity::Kind::Joint:
            if (activity.end_tick <= tick) {
                double& angle = activity.joint == Joint::Bend ? m.joint_bend_deg : m.joint_rotation_deg;
                const double swept = std::abs(activity.target_deg - angle);
                angle = activity.target_deg;
                if (activity.joint == Joint::Rotation && swept >= 90.0 - 1e-9) {
                    if (const auto* chain = held_chain(id)) {
                        for (const auto& member : *chain) {
                            auto& carried = world_.module(member);
                            if (carried.lifted && !carried.posture.is_upright()) carried.turned_over = true;
                        }
                    }
                }
                emit(activity.joint == Joint::Rotation ? "RotateDone" : "BendDone", {id}, {{"angle", angle}});
                done.push_back(id);
            }
            break;
        case Activity::Kind::Lift:
            if (activity.end_tick <= tick) {
                m.joint_bend_deg = kLiftBendDeg;
                for (const auto& member : held_chains_.at(id)) world_.module(member).lifted = true;
                emit("LiftDone", {id});
                done.push_back(id);
            }
            break;
        case Activity::Kind::Lower:
            if (activity.end_tick <= tick) {
                m.joint_bend_deg = 0.0;
                for (const auto& member : held_chains_.at(id)) world_.module(member).lifted = false;
                held_chains_.erase(id);
                emit("LowerDone", {id});
                done.push_back(id);
            }
            break;
        case Activity::Kind::Wait:
            if (activity.end_tick <= tick) done.push_back(id);
            break;
        case Activity::Kind::Handshake:
            break;
        }
    }
    for (const auto& id : done) activities_.erase(id);
}

void Engine::release_chain(const ModuleId& lifter, const char* reason)
{
    auto it = held_chains_.find(lifter);
    if (it == held_chains_.end()) return;
    for (const auto& member : it->second) {
        if (world_.contains(member)) world_.module(member).lifted = false;
    }
    std::vector<ModuleId> subjects{lifter};
    subjects.insert(subjects.end(), it->second.begin(), it->second.end());
    held_chains_.erase(it);
    emit("ChainReleased", std::move(subjects), {{"reason", std::string(reason)}});
}

void Engine::docking_transitions()
{
    auto pending = std::move(pending_undocks_);
    pending_undocks_.clear();
    for (const auto& [id, port] : pending) {
        const auto& status = world_.module(id).ports[static_cast<std::size_t>(port)];
        const auto* locked = std::get_if<PortLocked>(&status);
        if (locked == nullptr) {
            reject(id, "Undock", "NoSuchConnection");
            continue;
        }
        const auto connection = world_.connections.at(locked->connection);
        for (const auto& lifter : {connection.module_a, connection.module_b}) {
            const auto* chain = held_chain(lifter);
            if (chain != nullptr && !chain->empty() && chain->front() == connection.peer_of(lifter)) {
                release_chain(lifter, "Undocked");
            }
        }
        world_ = undock(world_, connection.id);
        emit("Undocked", {connection.module_a, connection.module_b},
             {{"connection", static_cast<std::int64_t>(connection.id)}});
    }

    std::vector<ModuleId> done;
    for (auto& [id, activity] : activities_) {
        if (activity.kind != Activity::Kind::Handshake || activity.end_tick > world_.tick) continue;
        const auto& dock_with = activity.dock;
        const DockRequest request{id, dock_with.port, dock_with.peer, dock_with.peer_port, dock_with.orientation_deg};
        try {
            world_ = dock(world_, request);
            const auto& status = world_.module(id).ports[static_cast<std::size_t>(dock_with.port)];
            emit("Docked", {id, dock_with.peer},
                 {{"connection", static_cast<std::int64_t>(std::get<PortLocked>(status).connection)},
                  {"orientation", std::int64_t{dock_with.orientation_deg}}});
        } catch (const DockingError& e) {
            for (const auto& [mid, port] : {std::pair{id, dock_with.port}, std::pair{dock_with.peer, dock_with.peer_port}}) {
                auto& m = world_.module(mid);
                auto& status = m.ports[static_cast<std::size_t>(port)];
                if (std::holds_alternative<PortAligned>(status)) status = released_port(m, port);
            }
            rejections_[id].push_back(to_string(e.reason()));
            emit("DockFailed", {id, dock_with.peer}, {{"reason", std::string(to_string(e.reason()))}});
        }
        done.push_back(id);
    }
    for (const auto& id : done) activities_.erase(id);

    // A module that was turned over while carried rights itself once it is
    // set down and released.
    std::vector<ModuleId> righted;
    for (const auto& [id, m] : world_.modules) {
        if (m.turned_over && !m.posture.is_upright() && !m.lifted && world_.connections_of(id).empty()) {
            righted.push_back(id);
        }
    }
    for (const auto& id : righted) {
        world_ = set_posture(world_, id, Posture::upright());
        world_.module(id).turned_over = false;
        emit("PostureUpright", {id});
    }
}

void Engine::cancel_drives(const Organism& organism, const char* reason)
{
    for (const auto& member : organism) {
        auto it = activities_.find(member);
        if (it == activities_.end()) continue;
        if (it->second.kind == Activity::Kind::Drive) {
            activities_.erase(it);
            emit("MoveAborted", {member}, {{"reason", std::string(reason)}});
        }
    }
}

void Engine::power_step()
{
    const auto& config = world_.config;
    for (auto& [id, m] : world_.modules) {
        const bool depleted = m.spec.battery_energy_full_wh > 0.0 && m.battery_soc <= 0.0;
        if (depleted) {
            m.load_draw_w = 0.0;
            m.driving = false;
            continue;
        }
        m.load_draw_w = (m.spec.compute_mips > 0 ? config.idle_draw_w : 0.0) + (m.driving ? config.drive_draw_w : 0.0);
    }

    for (const auto& organism : connected_components(world_)) {
        auto attempt = [&]() -> bool {
            try {
                auto solution = solve_bus(world_, organism, config.dt);
                apply_bus_step(world_, organism, solution, config.dt);
                return true;
            } catch (const PowerError& e) {
                if (shedding_ == ShedPolicy::Halt) {
                    emit("FatalEvent", organism, {{"fault", std::string(to_string(e.fault()))}});
                    halted_ = true;
                    return true;
                }
                return false;
            }
        };
        if (attempt()) continue;

        cancel_drives(organism, "LoadShed");
        for (const auto& id : organism) {
            auto& m = world_.module(id);
            if (m.driving) m.load_draw_w = std::max(0.0, m.load_draw_w - config.drive_draw_w);
            m.driving = false;
        }
        emit("LoadShed", organism, {{"stage", std::int64_t{1}}});
        if (attempt()) continue;

        for (const auto& id : organism) world_.module(id).load_draw_w = 0.0;
        emit("LoadShed", organism, {{"stage", std::int64_t{2}}});
        attempt();
    }
}

void Engine::deliver_messages()
{
    std::vector<PendingMessage> due;
    std::vector<PendingMessage> later;
    for (auto& message : outbox_) {
        (message.due_tick <= world_.tick ? due : later).push_back(std::move(message));
    }
    outbox_ = std::move(later);
    std::stable_sort(due.begin(), due.end(), [](const auto& l, const auto& r) {
        return std::tie(l.due_tick, l.message.src) < std::tie(r.due_tick, r.message.src);
    });
    for (auto& message : due) {
        if (!world_.contains(message.receiver)) continue;
        if (std::holds_alternative<WiredTo>(message.message.kind)) {
            emit("WiredDelivered", {message.message.src, message.receiver}, {{"payload", message.message.payload}});
        }
        inbox_[message.receiver].push_back(std::move(message.message));
    }
}

void Engine::refresh_sensors()
{
    std::map<ModuleId, const Organism*> organism_index;
    const auto organisms = connected_components(world_);
    for (const auto& organism : organisms) {
        for (const auto& id : organism) organism_index[id] = &organism;
    }

    SensorMemory memory;
    memory.observed_tick = world_.tick;
    for (const auto& [id, m] : world_.modules) {
        SensorReading r;
        r.pose = m.pose;
        r.posture = m.posture;
        r.kind = m.kind();
        r.battery_soc = m.battery_soc;
        r.joint_bend_deg = m.joint_bend_deg;
        r.joint_rotation_deg = m.joint_rotation_deg;
        r.ports = m.ports;
        if (auto it = inbox_.find(id); it != inbox_.end()) r.inbox = it->second;
        for (const auto& [other_id, other] : world_.modules) {
            if (other_id == id) continue;
            const double d = distance(m.pose, other.pose);
            if (d <= world_.config.wireless_range) r.neighbors.emplace(other_id, d);
        }
        r.organism = *organism_index.at(id);
        r.busy = busy(id);
        r.lifted = m.lifted;
        if (auto it = rejections_.find(id); it != rejections_.end()) r.rejections = it->second;
        memory.readings.emplace(id, std::move(r));
    }
    sensors_ = std::move(memory);
}

}  // namespace heterosim
