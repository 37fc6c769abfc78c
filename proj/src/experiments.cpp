#include "heterosim/experiments.hpp"

#include "heterosim/error.hpp"
#include "heterosim/powerbus.hpp"

#include <algorithm>

namespace heterosim {
namespace {

bool same_organism(const SensorMemory& memory, const ModuleId& a, const ModuleId& b)
{
    const auto& organism = memory.at(a).organism;
    return std::find(organism.begin(), organism.end(), b) != organism.end();
}

std::optional<int> lowest_free_port(const SensorReading& reading)
{
    for (std::size_t p = 0; p < reading.ports.size(); ++p) {
        if (std::holds_alternative<PortFree>(reading.ports[p])) return static_cast<int>(p);
    }
    return std::nullopt;
}

std::vector<ModuleId> ids_of_kind(const ScenarioScript& script, ModuleKind kind)
{
    std::vector<ModuleId> out;
    for (const auto& m : script.modules) {
        if (m.kind == kind) out.push_back(m.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::optional<double> MetricsReport::speed(const std::string& label) const
{
    for (const auto& [key, value] : speeds) {
        if (key == label) return value;
    }
    return std::nullopt;
}

MetricsReport summarize(const World& world)
{
    MetricsReport report;
    for (const auto& organism : connected_components(world)) {
        OrganismMetrics metrics;
        metrics.members = organism;
        metrics.mips = total_compute(world, organism);
        metrics.available_wh = total_available_energy(world, organism);
        metrics.speed_cm_s = organism_speed(world, organism);
        for (const auto& id : organism) {
            const auto& m = world.module(id);
            if (m.spec.compute_mips > 0) ++metrics.cpu_nodes;
            if (m.lifted) metrics.non_driving_capacity_wh += m.spec.battery_energy_full_wh;
        }
        report.total_mips += metrics.mips;
        report.total_wh += metrics.available_wh;
        report.organisms.push_back(std::move(metrics));
    }
    return report;
}

// ---------------------------------------------------------------------------

AssemblyController::AssemblyController(ModuleId wheel_1, ModuleId wheel_2, ModuleId backbone_1, ModuleId backbone_2)
    : w1_(std::move(wheel_1)), w2_(std::move(wheel_2)), b1_(std::move(backbone_1)), b2_(std::move(backbone_2))
{
}

ControllerStatus AssemblyController::status() const
{
    if (stage_ == Stage::Done) return ControllerStatus::Succeeded;
    if (stage_ == Stage::Failed) return ControllerStatus::Failed;
    return ControllerStatus::Running;
}

std::vector<Command> AssemblyController::fail(std::string reason, std::vector<Annotation>& notes)
{
    failure_ = std::move(reason);
    stage_ = Stage::Failed;
    notes.push_back({"ExperimentFailed", {w1_, w2_, b1_, b2_}, {{"reason", failure_}}});
    return {};
}

std::vector<Command> AssemblyController::decide(const SensorMemory& memory, std::int64_t /*tick*/,
                                                std::vector<Annotation>& notes)
{
    for (const auto& id : {w1_, w2_, b1_, b2_}) {
        const auto& rejections = memory.at(id).rejections;
        if (issued_ && !rejections.empty()) return fail(id + " rejected: " + rejections.front(), notes);
    }
    auto dock_to = [&](const ModuleId& initiator, const ModuleId& peer) -> std::vector<Command> {
        auto own = lowest_free_port(memory.at(initiator));
        auto theirs = lowest_free_port(memory.at(peer));
        if (!own || !theirs) return fail("no free port between " + initiator + " and " + peer, notes);
        issued_ = true;
        return {{initiator, DockWith{peer, *own, *theirs, 0}}};
    };
    auto advance = [&](Stage next) {
        stage_ = next;
        issued_ = false;
    };

    switch (stage_) {
    case Stage::LinkBackbones:
        if (same_organism(memory, b1_, b2_)) {
            advance(Stage::DockFirstWheel);
            return decide(memory, 0, notes);
        }
        if (!issued_) return dock_to(b2_, b1_);
        return {};
    case Stage::DockFirstWheel:
        if (!issued_) return dock_to(w1_, b1_);
        if (same_organism(memory, w1_, b1_) && !memory.at(w1_).busy) {
            advance(Stage::DockSecondWheel);
            return decide(memory, 0, notes);
        }
        return {};
    case Stage::DockSecondWheel:
        if (!issued_) return dock_to(w2_, b2_);
        if (memory.at(w2_).organism.size() >= 4 && same_organism(memory, w2_, w1_) && !memory.at(w2_).busy) {
            notes.push_back({"OrganismFormed", memory.at(w2_).organism,
                             {{"size", static_cast<std::int64_t>(memory.at(w2_).organism.size())}}});
            advance(Stage::Lift);
            return decide(memory, 0, notes);
        }
        return {};
    case Stage::Lift:
        if (!issued_) {
            issued_ = true;
            return {{w1_, LiftChain{{b1_}}}, {w2_, LiftChain{{b2_}}}};
        }
        if (memory.at(b1_).lifted && memory.at(b2_).lifted && !memory.at(w1_).busy && !memory.at(w2_).busy) {
            notes.push_back({"CarryingConfiguration", {w1_, w2_, b1_, b2_}, {}});
            advance(Stage::Drive);
            return decide(memory, 0, notes);
        }
        return {};
    case Stage::Drive:
        if (!issued_) {
            issued_ = true;
            return {{w1_, Move{kDriveDistanceM}}};
        }
        if (!memory.at(w1_).busy) {
            notes.push_back({"AssemblyComplete", memory.at(w1_).organism, {}});
            advance(Stage::Done);
        }
        return {};
    case Stage::Done:
    case Stage::Failed:
        return {};
    }
    return {};
}

// ---------------------------------------------------------------------------

RescueController::RescueController(ModuleId fallen) : fallen_(std::move(fallen)) {}

ControllerStatus RescueController::status() const
{
    if (stage_ == Stage::Done) return ControllerStatus::Succeeded;
    if (stage_ == Stage::Failed) return ControllerStatus::Failed;
    return ControllerStatus::Running;
}

std::vector<Command> RescueController::fail(std::string reason, std::vector<Annotation>& notes)
{
    failure_ = std::move(reason);
    stage_ = Stage::Failed;
    std::vector<ModuleId> subjects{fallen_};
    if (!rescuer_.empty()) subjects.push_back(rescuer_);
    notes.push_back({"RescueInfeasible", subjects, {{"reason", failure_}}});
    return {};
}

std::vector<Command> RescueController::decide(const SensorMemory& memory, std::int64_t /*tick*/,
                                              std::vector<Annotation>& notes)
{
    if (issued_) {
        for (const auto& id : {fallen_, rescuer_}) {
            if (id.empty()) continue;
            const auto& rejections = memory.at(id).rejections;
            if (!rejections.empty()) return fail(id + " rejected: " + rejections.front(), notes);
        }
    }
    auto advance = [&](Stage next) {
        stage_ = next;
        issued_ = false;
    };
    const auto& fallen = memory.at(fallen_);

    switch (stage_) {
    case Stage::Call:
        issued_ = true;
        stage_ = Stage::Answer;
        notes.push_back({"HelpBroadcast", {fallen_}, {}});
        return {{fallen_, Broadcast{kHelpPayload}}};

    case Stage::Answer: {
        for (const auto& [id, reading] : memory.readings) {
            if (reading.kind != ModuleKind::ActiveWheel || reading.busy || reading.organism.size() != 1 ||
                !reading.posture.is_upright()) {
                continue;
            }
            const bool heard = std::any_of(reading.inbox.begin(), reading.inbox.end(), [&](const Message& m) {
                return m.src == fallen_ && m.payload == kHelpPayload;
            });
            if (heard) {
                rescuer_ = id;
                break;
            }
        }
        if (rescuer_.empty()) return fail("no ActiveWheel received the call for help", notes);
        notes.push_back({"HelpAck", {rescuer_, fallen_}, {}});
        advance(Stage::Approach);
        return {{rescuer_, Broadcast{"ACK " + fallen_}}};
    }

    case Stage::Approach: {
        if (!issued_) {
            const int ports = static_cast<int>(fallen.ports.size());
            const int ground = std::max(fallen.posture.ground_port, 0);
            std::optional<int> target;
            for (int k = 1; k < ports && !target; ++k) {
                const int p = (ground + k) % ports;
                if (std::holds_alternative<PortFree>(fallen.ports[static_cast<std::size_t>(p)])) target = p;
            }
            auto own = lowest_free_port(memory.at(rescuer_));
            if (!target || !own) return fail("no free port to grip " + fallen_, notes);
            rescuer_port_ = *own;
            issued_ = true;
            return {{rescuer_, DockWith{fallen_, *own, *target, 0}}};
        }
        if (same_organism(memory, rescuer_, fallen_) && !memory.at(rescuer_).busy) {
            advance(Stage::Lift);
            return decide(memory, 0, notes);
        }
        return {};
    }

    case Stage::Lift:
        if (!issued_) {
            issued_ = true;
            return {{rescuer_, LiftChain{{fallen_}}}};
        }
        if (fallen.lifted && !memory.at(rescuer_).busy) {
            advance(Stage::Rotate);
            return decide(memory, 0, notes);
        }
        return {};

    case Stage::Rotate:
        if (!issued_) {
            issued_ = true;
            return {{rescuer_, ActuateJoint{Joint::Rotation, kRotationDeg}}};
        }
        if (!memory.at(rescuer_).busy && memory.at(rescuer_).joint_rotation_deg == kRotationDeg) {
            advance(Stage::Lower);
            return decide(memory, 0, notes);
        }
        return {};

    case Stage::Lower:
        if (!issued_) {
            issued_ = true;
            return {{rescuer_, LowerChain{}}};
        }
        if (!fallen.lifted && !memory.at(rescuer_).busy) {
            advance(Stage::Release);
            return decide(memory, 0, notes);
        }
        return {};

    case Stage::Release:
        if (!issued_) {
            issued_ = true;
            return {{rescuer_, Undock{rescuer_port_}}};
        }
        if (fallen.organism.size() == 1) {
            if (!fallen.posture.is_upright()) return fail(fallen_ + " is still on its side after release", notes);
            advance(Stage::Resume);
            return decide(memory, 0, notes);
        }
        return {};

    case Stage::Resume:
        issued_ = true;
        stage_ = Stage::Confirm;
        return {{fallen_, Move{kResumeDistanceM}}};

    case Stage::Confirm:
        notes.push_back({"ResumedOperation", {fallen_}, {}});
        stage_ = Stage::Done;
        return {};

    case Stage::Done:
    case Stage::Failed:
        return {};
    }
    return {};
}

// ---------------------------------------------------------------------------

ScenarioScript default_assembly_script()
{
    ScenarioScript script;
    script.name = "assembly";
    script.builtin = BuiltinExperiment::Assembly;
    script.modules = {
        {"B1", ModuleKind::Backbone, {0.0, 0.0, Heading(0)}, 1.0, true, Posture::upright(), std::nullopt},
        {"B2", ModuleKind::Backbone, {0.105, 0.0, Heading(0)}, 1.0, true, Posture::upright(), std::nullopt},
        {"W1", ModuleKind::ActiveWheel, {-0.6, 0.0, Heading(0)}, 1.0, true, Posture::upright(), std::nullopt},
        {"W2", ModuleKind::ActiveWheel, {0.8, 0.0, Heading(180)}, 1.0, true, Posture::upright(), std::nullopt},
    };
    script.connections = {{"B1", 1, "B2", 3, 0}};
    return script;
}

ScenarioScript default_rescue_script()
{
    ScenarioScript script;
    script.name = "rescue";
    script.builtin = BuiltinExperiment::Rescue;
    script.modules = {
        {"B1", ModuleKind::Backbone, {0.0, 0.0, Heading(0)}, 1.0, true, Posture::fallen_on(3), std::nullopt},
        {"W1", ModuleKind::ActiveWheel, {1.5, 0.0, Heading(180)}, 1.0, true, Posture::upright(), std::nullopt},
    };
    return script;
}

const std::vector<std::string>& rescue_stage_events()
{
    static const std::vector<std::string> stages{
        "HelpBroadcast", "HelpAck", "ApproachStart", "Docked",         "LiftStart",
        "RotateStart",   "LowerStart", "Undocked", "PostureUpright", "ResumedOperation",
    };
    return stages;
}

namespace {

RunOutcome finish(Engine& engine, RunOutcome outcome)
{
    outcome.log = engine.log();
    outcome.final_world = engine.world();
    const auto* controller = engine.controller();
    if (engine.halted()) {
        outcome.status = RunStatus::ScenarioFailure;
        outcome.failure = "halted on a power fault";
    } else if (controller != nullptr && controller->status() == ControllerStatus::Failed) {
        outcome.status = RunStatus::ScenarioFailure;
        outcome.failure = controller->failure_reason();
    } else if (controller != nullptr && controller->status() == ControllerStatus::Running) {
        outcome.status = RunStatus::ScenarioFailure;
        outcome.failure = "max_ticks reached before the experiment finished";
    }
    return outcome;
}

}  // namespace

RunOutcome run_assembly_experiment(const ScenarioScript& input)
{
    ScenarioScript script = input;
    script.builtin = BuiltinExperiment::Assembly;
    validate_script(script);
    const auto wheels = ids_of_kind(script, ModuleKind::ActiveWheel);
    const auto backbones = ids_of_kind(script, ModuleKind::Backbone);
    const std::vector<ModuleId> participants{wheels[0], wheels[1], backbones[0], backbones[1]};

    Engine engine(build_world(script), script.timeline,
                  std::make_unique<AssemblyController>(wheels[0], wheels[1], backbones[0], backbones[1]),
                  script.shedding);

    std::optional<double> before_lift;
    std::optional<double> after_lift;
    while (!engine.halted() && !engine.finished() && engine.world().tick < script.config.max_ticks) {
        engine.step();
        const auto& world = engine.world();
        const auto organism = organism_of(world, participants[0]);
        const bool together = std::all_of(participants.begin(), participants.end(), [&](const ModuleId& id) {
            return std::binary_search(organism.begin(), organism.end(), id);
        });
        if (!together) continue;
        const bool backbones_lifted = world.module(backbones[0]).lifted && world.module(backbones[1]).lifted;
        const bool any_lifted = std::any_of(organism.begin(), organism.end(),
                                            [&](const ModuleId& id) { return world.module(id).lifted; });
        if (!before_lift && !any_lifted) before_lift = organism_speed(world, organism);
        if (!after_lift && backbones_lifted) after_lift = organism_speed(world, organism);
    }

    RunOutcome outcome;
    outcome.report = summarize(engine.world());
    if (before_lift) outcome.report.speeds.emplace_back("before_lift", *before_lift);
    if (after_lift) outcome.report.speeds.emplace_back("after_lift", *after_lift);
    return finish(engine, std::move(outcome));
}

RunOutcome run_rescue_experiment(const ScenarioScript& input)
{
    ScenarioScript script = input;
    script.builtin = BuiltinExperiment::Rescue;
    validate_script(script);
    ModuleId fallen;
    for (const auto& m : script.modules) {
        if (m.kind == ModuleKind::Backbone && !m.posture.is_upright() && (fallen.empty() || m.id < fallen)) {
            fallen = m.id;
        }
    }

    auto world = build_world(script);
    const auto initial_connections = world.connections.size();
    Engine engine(std::move(world), script.timeline, std::make_unique<RescueController>(fallen), script.shedding);
    engine.run();

    RunOutcome outcome;
    const auto& final_world = engine.world();
    outcome.report = summarize(final_world);
    outcome.report.speeds.emplace_back("rescued_module", organism_speed(final_world, organism_of(final_world, fallen)));
    const bool succeeded = engine.controller()->status() == ControllerStatus::Succeeded && !engine.halted() &&
                           final_world.module(fallen).posture.is_upright() &&
                           final_world.connections.size() == initial_connections;
    outcome.report.rescue_success = succeeded;
    outcome = finish(engine, std::move(outcome));
    if (!succeeded && outcome.status == RunStatus::Success) {
        outcome.status = RunStatus::ScenarioFailure;
        outcome.failure = "rescue postconditions not met";
    }
    return outcome;
}

RunOutcome run_scenario(const ScenarioScript& input)
{
    switch (input.builtin) {
    case BuiltinExperiment::Assembly: return run_assembly_experiment(input);
    case BuiltinExperiment::Rescue: return run_rescue_experiment(input);
    case BuiltinExperiment::None: break;
    }
    ScenarioScript script = input;
    validate_script(script);
    Engine engine(build_world(script), script.timeline, nullptr, script.shedding);
    engine.run();
    RunOutcome outcome;
    outcome.report = summarize(engine.world());
    return finish(engine, std::move(outcome));
}

}  // namespace heterosim
