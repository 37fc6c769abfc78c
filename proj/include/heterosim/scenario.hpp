#pragma once

#include "heterosim/commnet.hpp"
#include "heterosim/docking.hpp"
#include "heterosim/mechanics.hpp"
#include "heterosim/model.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace heterosim {

// ---------------------------------------------------------------------------
// Directives: the platform-independent command vocabulary.

struct Move {
    double distance_m = 0.0;  // signed, along the module's heading
};
struct Turn {
    int degrees = 90;  // one of +-90, +-180
};
struct DockWith {
    ModuleId peer;
    int port = 0;
    int peer_port = 0;
    int orientation_deg = 0;
};
struct Undock {
    int port = 0;  // issuing module's port holding the connection
};
struct ActuateJoint {
    Joint joint = Joint::Bend;
    double target_deg = 0.0;
};
struct SetSharing {
    bool on = true;
};
struct LiftChain {
    std::vector<ModuleId> chain;
};
struct LowerChain {};
struct Broadcast {
    std::string payload;
};
struct SendWired {
    ModuleId dst;
    std::string payload;
};
struct Wait {
    std::int64_t ticks = 1;
};

using Directive = std::variant<Move, Turn, DockWith, Undock, ActuateJoint, SetSharing, LiftChain, LowerChain,
                               Broadcast, SendWired, Wait>;

const char* directive_name(const Directive& directive);

/// Platform-specific realization of a directive.
enum class ActionKind {
    TrackDrive,
    ScrewDrive,
    OmniDrive,
    OmniRotate,
    PivotTurn,
    DockHandshake,
    Release,
    JointActuation,
    SharingSwitch,
    ChainLift,
    ChainLower,
    WirelessSend,
    WiredSend,
    Idle,
};

const char* to_string(ActionKind kind);

struct ConcreteAction {
    ActionKind kind = ActionKind::Idle;
    double rate = 0.0;                   // cm/s for drives, deg/s for turns and joints
    std::optional<double> duration_s;    // unset when it depends on runtime state
};

/// Bend angle a lifter drives to when raising a chain off the ground.
inline constexpr double kLiftBendDeg = 90.0;

/// Maps a directive onto the platform's implementation. Throws
/// UnsupportedDirective for pairs the platform cannot perform (e.g. Move on a
/// Passive module) and for malformed arguments such as a 45 degree turn.
ConcreteAction dispatch(ModuleKind kind, const Directive& directive, const SimConfig& config = {});

/// Whole ticks needed for `duration_s`, rounded up.
std::int64_t ticks_for(double duration_s, double dt);

// ---------------------------------------------------------------------------
// Events.

using EventValue = std::variant<std::int64_t, double, bool, std::string>;

struct Event {
    std::int64_t tick = 0;
    double t = 0.0;
    std::string type;
    std::vector<ModuleId> subjects;
    std::vector<std::pair<std::string, EventValue>> data;

    const EventValue* find(const std::string& key) const;
    bool operator==(const Event&) const = default;
};

class EventLog {
public:
    void append(Event event);
    const std::vector<Event>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }

    std::vector<const Event*> of_type(const std::string& type) const;
    bool contains(const std::string& type) const { return !of_type(type).empty(); }

private:
    std::vector<Event> events_;
};

// ---------------------------------------------------------------------------
// Sensor memory: the only view controllers get of the world.

struct SensorReading {
    Pose pose;
    Posture posture;
    ModuleKind kind = ModuleKind::Passive;
    double battery_soc = 0.0;
    double joint_bend_deg = 0.0;
    double joint_rotation_deg = 0.0;
    std::vector<DockStatus> ports;
    std::vector<Message> inbox;                  // received during the observed tick
    std::map<ModuleId, double> neighbors;        // within wireless range, by distance
    std::vector<ModuleId> organism;              // wired-bus enumeration
    bool busy = false;
    bool lifted = false;
    std::vector<std::string> rejections;         // directive rejections during the observed tick
};

struct SensorMemory {
    std::int64_t observed_tick = -1;  // world tick the readings describe
    std::map<ModuleId, SensorReading> readings;

    const SensorReading& at(const ModuleId& id) const;
};

// ---------------------------------------------------------------------------
// Controllers.

struct Command {
    ModuleId module;
    Directive directive;
};

struct Annotation {
    std::string type;
    std::vector<ModuleId> subjects;
    std::vector<std::pair<std::string, EventValue>> data;
};

enum class ControllerStatus { Running, Succeeded, Failed };

class Controller {
public:
    virtual ~Controller() = default;

    /// Called once per tick with the memory refreshed at the end of the
    /// previous tick. Annotations are logged at the start of the tick.
    virtual std::vector<Command> decide(const SensorMemory& memory, std::int64_t tick,
                                        std::vector<Annotation>& notes) = 0;
    virtual ControllerStatus status() const = 0;
    virtual std::string failure_reason() const { return {}; }
};

// ---------------------------------------------------------------------------
// Scripts.

struct ModuleSetup {
    ModuleId id;
    ModuleKind kind = ModuleKind::Backbone;
    Pose pose;
    double soc = 1.0;
    bool sharing_on = true;
    Posture posture;
    std::optional<PassiveParams> passive;
};

struct TimelineEntry {
    std::int64_t tick = 0;
    ModuleId module;
    Directive directive;
};

enum class BuiltinExperiment { None, Assembly, Rescue };
enum class ShedPolicy { Halt, Shed };

const char* to_string(BuiltinExperiment builtin);

struct ScenarioScript {
    std::string name;
    SimConfig config;
    std::vector<ModuleSetup> modules;
    std::vector<DockRequest> connections;
    std::vector<TimelineEntry> timeline;
    BuiltinExperiment builtin = BuiltinExperiment::None;
    ShedPolicy shedding = ShedPolicy::Halt;
};

/// Sorts the timeline by (tick, module) and checks ids, ports, turn angles,
/// duplicate keys and built-in preconditions. Throws ValidationError.
void validate_script(ScenarioScript& script);

/// Initial world of a script: modules, postures and pre-locked connections.
World build_world(const ScenarioScript& script);

// ---------------------------------------------------------------------------
// Engine.

/// Deterministic fixed-step engine. Each tick runs, in order: controller
/// reads, directive dispatch by module id, motion, docking transitions,
/// power, message delivery, sensor refresh and event emission.
class Engine {
public:
    Engine(World world, std::vector<TimelineEntry> timeline = {}, std::unique_ptr<Controller> controller = nullptr,
           ShedPolicy shedding = ShedPolicy::Halt);

    /// Runs one tick with `pending` dispatched alongside timeline and
    /// controller commands. Returns the events emitted during the tick.
    std::vector<Event> step(std::vector<Command> pending = {});

    /// Steps until the controller finishes, the timeline drains with nothing
    /// in flight, the engine halts, or max_ticks is reached.
    void run();

    const World& world() const noexcept { return world_; }
    const EventLog& log() const noexcept { return log_; }
    const SensorMemory& sensors() const noexcept { return sensors_; }
    const Controller* controller() const noexcept { return controller_.get(); }

    bool halted() const noexcept { return halted_; }
    bool finished() const;
    bool busy(const ModuleId& id) const;
    /// Chain currently held off the ground by `lifter`, if any.
    const std::vector<ModuleId>* held_chain(const ModuleId& lifter) const;

private:
    struct Activity {
        enum class Kind { Drive, Approach, Handshake, Turn, Joint, Lift, Lower, Wait };
        Kind kind = Kind::Wait;
        std::int64_t end_tick = 0;  // last tick of timed activities
        double remaining_m = 0.0;   // Drive, Approach
        double dir_x = 0.0;
        double dir_y = 0.0;
        DockWith dock;              // Approach, Handshake
        Joint joint = Joint::Bend;  // Joint
        double target_deg = 0.0;    // Joint
        int turn_degrees = 0;       // Turn
    };
    struct PendingMessage {
        std::int64_t due_tick;
        ModuleId receiver;
        Message message;
    };

    void emit(std::string type, std::vector<ModuleId> subjects,
              std::vector<std::pair<std::string, EventValue>> data = {});
    void reject(const ModuleId& module, const std::string& directive, const std::string& reason);

    void dispatch_command(const Command& command);
    void start_move(const ModuleId& id, const Move& move);
    void start_turn(const ModuleId& id, const Turn& turn, const ConcreteAction& action);
    void start_dock(const ModuleId& id, const DockWith& dock);
    void start_joint(const ModuleId& id, const ActuateJoint& joint);
    void start_lift(const ModuleId& id, const LiftChain& lift);
    void start_lower(const ModuleId& id);
    void send_broadcast(const ModuleId& id, const Broadcast& broadcast);
    void send_wired(const ModuleId& id, const SendWired& send);

    void integrate_motion();
    void docking_transitions();
    void power_step();
    void deliver_messages();
    void refresh_sensors();
    void phase_marker(int phase, const char* name);

    void cancel_drives(const Organism& organism, const char* reason);
    void release_chain(const ModuleId& lifter, const char* reason);
    std::int64_t activity_end(double duration_s) const;

    World world_;
    std::vector<TimelineEntry> timeline_;
    std::size_t timeline_cursor_ = 0;
    std::unique_ptr<Controller> controller_;
    ShedPolicy shedding_;

    std::map<ModuleId, Activity> activities_;
    std::map<ModuleId, std::vector<ModuleId>> held_chains_;
    std::vector<std::pair<ModuleId, int>> pending_undocks_;
    std::vector<PendingMessage> outbox_;
    std::map<ModuleId, std::vector<Message>> inbox_;
    std::map<ModuleId, std::vector<std::string>> rejections_;

    SensorMemory sensors_;
    EventLog log_;
    std::vector<Event> tick_events_;
    std::mt19937_64 rng_;
    bool halted_ = false;
};

}  // namespace heterosim
