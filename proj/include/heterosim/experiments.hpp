#pragma once

#include "heterosim/scenario.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace heterosim {

struct OrganismMetrics {
    std::vector<ModuleId> members;
    std::int64_t mips = 0;
    std::int64_t cpu_nodes = 0;
    double available_wh = 0.0;
    double non_driving_capacity_wh = 0.0;  // full capacity of lifted members
    double speed_cm_s = 0.0;
};

struct MetricsReport {
    std::vector<OrganismMetrics> organisms;
    std::int64_t total_mips = 0;
    double total_wh = 0.0;
    std::vector<std::pair<std::string, double>> speeds;  // labelled, in recording order
    std::optional<bool> rescue_success;

    std::optional<double> speed(const std::string& label) const;
};

MetricsReport summarize(const World& world);

enum class RunStatus { Success, ScenarioFailure };

struct RunOutcome {
    RunStatus status = RunStatus::Success;
    std::string failure;
    EventLog log;
    MetricsReport report;
    World final_world;
};

/// Assembly run: two pre-linked Backbones, an Active Wheel docks to
/// the pair, the second wheel docks to complete the organism, then the
/// wheels lift the Backbones and drive the organism.
class AssemblyController : public Controller {
public:
    enum class Stage { LinkBackbones, DockFirstWheel, DockSecondWheel, Lift, Drive, Done, Failed };

    AssemblyController(ModuleId wheel_1, ModuleId wheel_2, ModuleId backbone_1, ModuleId backbone_2);

    std::vector<Command> decide(const SensorMemory& memory, std::int64_t tick, std::vector<Annotation>& notes) override;
    ControllerStatus status() const override;
    std::string failure_reason() const override { return failure_; }
    Stage stage() const noexcept { return stage_; }

    static constexpr double kDriveDistanceM = 0.31;

private:
    std::vector<Command> fail(std::string reason, std::vector<Annotation>& notes);

    ModuleId w1_, w2_, b1_, b2_;
    Stage stage_ = Stage::LinkBackbones;
    bool issued_ = false;
    std::string failure_;
};

/// Call-for-help choreography: broadcast, acknowledge, approach and dock,
/// lift, rotate, lower, release, right the module and resume driving.
class RescueController : public Controller {
public:
    enum class Stage { Call, Answer, Approach, Lift, Rotate, Lower, Release, Resume, Confirm, Done, Failed };

    explicit RescueController(ModuleId fallen);

    std::vector<Command> decide(const SensorMemory& memory, std::int64_t tick, std::vector<Annotation>& notes) override;
    ControllerStatus status() const override;
    std::string failure_reason() const override { return failure_; }
    Stage stage() const noexcept { return stage_; }
    const ModuleId& rescuer() const noexcept { return rescuer_; }

    static constexpr const char* kHelpPayload = "HELP";
    static constexpr double kRotationDeg = 180.0;
    static constexpr double kResumeDistanceM = 0.06;

private:
    std::vector<Command> fail(std::string reason, std::vector<Annotation>& notes);

    ModuleId fallen_;
    ModuleId rescuer_;
    int rescuer_port_ = 0;
    Stage stage_ = Stage::Call;
    bool issued_ = false;
    std::string failure_;
};

/// Default layouts of the two built-in experiments.
ScenarioScript default_assembly_script();
ScenarioScript default_rescue_script();

/// Rescue stage markers, in order.
const std::vector<std::string>& rescue_stage_events();

RunOutcome run_assembly_experiment(const ScenarioScript& script);
RunOutcome run_rescue_experiment(const ScenarioScript& script);

/// Runs any validated script; built-in experiments dispatch to their runners.
RunOutcome run_scenario(const ScenarioScript& script);

}  // namespace heterosim
