#include "heterosim/error.hpp"
#include "heterosim/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace heterosim;

namespace {

ScenarioScript two_modules()
{
    ScenarioScript s;
    s.name = "unit";
    s.modules.push_back({"B1", ModuleKind::Backbone, Pose{0.0, 0.0, Heading(0)}, 1.0, true, {}, {}});
    s.modules.push_back({"W1", ModuleKind::ActiveWheel, Pose{0.6, 0.0, Heading(180)}, 1.0, true, {}, {}});
    return s;
}

// Records what the sensor memory showed on each tick.
class Probe : public Controller {
public:
    std::vector<std::int64_t> observed;
    std::vector<double> wheel_x;
    std::int64_t stop_after = 30;

    std::vector<Command> decide(const SensorMemory& memory, std::int64_t tick, std::vector<Annotation>&) override
    {
        observed.push_back(memory.observed_tick);
        if (memory.observed_tick >= 0) wheel_x.push_back(memory.at("W1").pose.x);
        last_tick_ = tick;
        if (tick == 0) return {{"W1", Move{0.31}}};
        return {};
    }
    ControllerStatus status() const override
    {
        return last_tick_ >= stop_after ? ControllerStatus::Succeeded : ControllerStatus::Running;
    }

private:
    std::int64_t last_tick_ = -1;
};

}  // namespace

TEST(Scenario, DispatchMapsDirectivesOntoPlatforms)
{
    EXPECT_EQ(dispatch(ModuleKind::Scout, Move{1.0}).kind, ActionKind::TrackDrive);
    EXPECT_EQ(dispatch(ModuleKind::Backbone, Move{1.0}).kind, ActionKind::ScrewDrive);
    const auto omni = dispatch(ModuleKind::ActiveWheel, Move{0.31});
    EXPECT_EQ(omni.kind, ActionKind::OmniDrive);
    ASSERT_TRUE(omni.duration_s);
    EXPECT_NEAR(*omni.duration_s, 1.0, 1e-12);
    EXPECT_EQ(dispatch(ModuleKind::ActiveWheel, Turn{90}).kind, ActionKind::OmniRotate);
    EXPECT_EQ(dispatch(ModuleKind::Backbone, Turn{-180}).kind, ActionKind::PivotTurn);
    EXPECT_THROW(dispatch(ModuleKind::Passive, Move{1.0}), UnsupportedDirective);
    EXPECT_THROW(dispatch(ModuleKind::Scout, Turn{45}), UnsupportedDirective);
    EXPECT_THROW(dispatch(ModuleKind::Passive, ActuateJoint{Joint::Bend, 10.0}), UnsupportedDirective);
    EXPECT_EQ(dispatch(ModuleKind::Scout, SetSharing{false}).kind, ActionKind::SharingSwitch);
}

TEST(Scenario, DurationsRoundUpToWholeTicks)
{
    EXPECT_EQ(ticks_for(1.0, 0.1), 10);
    EXPECT_EQ(ticks_for(1.01, 0.1), 11);
    EXPECT_EQ(ticks_for(0.0, 0.1), 0);
    EXPECT_EQ(ticks_for(0.3, 0.1), 3) << "0.3 / 0.1 is 2.9999999999999996 in binary";
}

TEST(Scenario, ValidationCatchesBadScripts)
{
    auto dup = two_modules();
    dup.modules.push_back(dup.modules.front());
    EXPECT_THROW(validate_script(dup), ValidationError);

    auto unknown = two_modules();
    unknown.timeline.push_back({0, "Nobody", Wait{1}});
    EXPECT_THROW(validate_script(unknown), ValidationError);

    auto turn = two_modules();
    turn.timeline.push_back({0, "B1", Turn{30}});
    EXPECT_THROW(validate_script(turn), ValidationError);

    auto twice = two_modules();
    twice.timeline.push_back({3, "B1", Wait{1}});
    twice.timeline.push_back({3, "B1", Wait{2}});
    EXPECT_THROW(validate_script(twice), ValidationError);

    auto assembly = two_modules();
    assembly.builtin = BuiltinExperiment::Assembly;
    EXPECT_THROW(validate_script(assembly), ValidationError);

    auto sorted = two_modules();
    sorted.timeline.push_back({5, "W1", Wait{1}});
    sorted.timeline.push_back({1, "W1", Wait{1}});
    validate_script(sorted);
    EXPECT_EQ(sorted.timeline.front().tick, 1);
}

TEST(Scenario, BadInitialConnectionIsAValidationError)
{
    auto s = two_modules();
    s.modules.push_back({"W2", ModuleKind::ActiveWheel, Pose{1.0, 0.0, Heading(0)}, 1.0, true, {}, {}});
    s.connections.push_back({"W1", 0, "W2", 0, 0});
    validate_script(s);
    EXPECT_THROW(build_world(s), ValidationError);
}

TEST(Scenario, ControllersSeeTheWorldOneTickLate)
{
    auto s = two_modules();
    validate_script(s);
    auto probe = std::make_unique<Probe>();
    auto* raw = probe.get();
    Engine engine(build_world(s), {}, std::move(probe));
    engine.run();
    ASSERT_GE(raw->observed.size(), 3u);
    for (std::size_t t = 0; t < raw->observed.size(); ++t) EXPECT_EQ(raw->observed[t], static_cast<std::int64_t>(t) - 1);
    // Move of 0.31 m at 31 cm/s: ten ticks of motion, then the wheel rests.
    EXPECT_NEAR(engine.world().module("W1").pose.x, 0.6 - 0.31, 1e-9);
    EXPECT_NEAR(raw->wheel_x.front(), 0.6 - 0.031, 1e-12) << "after tick 0 the wheel advanced one step";
}

TEST(Scenario, EventsAreOrderedAndTimestamped)
{
    auto s = two_modules();
    s.timeline.push_back({0, "W1", DockWith{"B1", 0, 1, 0}});
    s.timeline.push_back({2, "B1", Broadcast{"hi"}});
    validate_script(s);
    Engine engine(build_world(s), s.timeline);
    engine.run();
    const auto& events = engine.log().events();
    ASSERT_FALSE(events.empty());
    for (std::size_t i = 1; i < events.size(); ++i) ASSERT_LE(events[i - 1].tick, events[i].tick);
    for (const auto& e : events) EXPECT_EQ(e.t, std::round(static_cast<double>(e.tick) * 0.1 * 1e9) / 1e9);
    EXPECT_TRUE(engine.log().contains("ApproachStart"));
    EXPECT_TRUE(engine.log().contains("Aligned"));
    ASSERT_TRUE(engine.log().contains("Docked"));
    const auto* docked = engine.log().of_type("Docked").front();
    const auto* aligned = engine.log().of_type("Aligned").front();
    EXPECT_EQ(docked->tick - aligned->tick, 19) << "the 2 s handshake occupies 20 ticks ending at the lock";
    EXPECT_EQ(engine.world().connections.size(), 1u);
    EXPECT_NEAR(engine.world().energy.lock_wh, 0.5 / 3600.0, 1e-15);
}

TEST(Scenario, WheelToWheelDockIsRejectedInTheLog)
{
    auto s = two_modules();
    s.modules[0].kind = ModuleKind::ActiveWheel;
    s.modules[0].pose = Pose{0.495, 0.0, Heading(0)};
    s.timeline.push_back({0, "W1", DockWith{"B1", 0, 1, 0}});
    validate_script(s);
    Engine engine(build_world(s), s.timeline);
    engine.run();
    ASSERT_TRUE(engine.log().contains("DockRejected"));
    const auto* e = engine.log().of_type("DockRejected").front();
    EXPECT_EQ(std::get<std::string>(*e->find("reason")), "ShapeIncompatible");
    EXPECT_TRUE(engine.world().connections.empty());
}

TEST(Scenario, UnsupportedDirectivesAreLoggedNotThrown)
{
    auto s = two_modules();
    s.modules.push_back({"P", ModuleKind::Passive, Pose{2.0, 0.0, Heading(0)}, 0.0, true, {}, PassiveParams{}});
    s.timeline.push_back({0, "P", Move{1.0}});
    validate_script(s);
    Engine engine(build_world(s), s.timeline);
    engine.run();
    ASSERT_TRUE(engine.log().contains("DirectiveRejected"));
}

TEST(Scenario, PhaseTraceListsEightPhasesInOrder)
{
    auto s = two_modules();
    s.config.trace_phases = true;
    s.timeline.push_back({0, "B1", Wait{0}});
    validate_script(s);
    Engine engine(build_world(s), s.timeline);
    const auto events = engine.step();
    std::vector<std::int64_t> phases;
    for (const auto& e : events) {
        if (e.type == "Phase") phases.push_back(std::get<std::int64_t>(*e.find("phase")));
    }
    EXPECT_EQ(phases, (std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(Scenario, IdleModulesDrainAtIdlePower)
{
    auto s = two_modules();
    s.config.max_ticks = 100;
    s.timeline.push_back({99, "B1", Wait{0}});
    validate_script(s);
    Engine engine(build_world(s), s.timeline);
    engine.run();
    EXPECT_EQ(engine.world().tick, 100);
    EXPECT_NEAR(engine.world().energy.load_wh, 2 * 0.5 * 100 * 0.1 / 3600.0, 1e-12);
}
