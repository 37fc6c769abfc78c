#include "heterosim/experiments.hpp"
#include "heterosim/io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace heterosim;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Experiments, AssemblyBuildsAFourModuleCarrier)
{
    const auto out = run_scenario(default_assembly_script());
    ASSERT_EQ(out.status, RunStatus::Success) << out.failure;
    ASSERT_EQ(out.report.organisms.size(), 1u);
    const auto& o = out.report.organisms.front();
    EXPECT_EQ(o.members, (std::vector<ModuleId>{"B1", "B2", "W1", "W2"}));
    EXPECT_EQ(o.mips, 12400);
    EXPECT_EQ(o.cpu_nodes, 4);
    EXPECT_EQ(o.non_driving_capacity_wh, 2 * 33.0);
    EXPECT_EQ(out.report.speed("before_lift"), 6.0);
    EXPECT_EQ(out.report.speed("after_lift"), 31.0);
    EXPECT_FALSE(out.report.rescue_success.has_value());
    for (const char* e : {"OrganismFormed", "CarryingConfiguration", "AssemblyComplete"}) {
        EXPECT_TRUE(out.log.contains(e)) << e;
    }
}

TEST(Experiments, RescueFollowsTheStageSequence)
{
    const auto out = run_scenario(default_rescue_script());
    ASSERT_EQ(out.status, RunStatus::Success) << out.failure;
    std::vector<std::string> seen;
    for (const auto& e : out.log.events()) {
        for (const auto& stage : rescue_stage_events()) {
            if (e.type == stage) seen.push_back(stage);
        }
    }
    EXPECT_EQ(seen, rescue_stage_events());
    EXPECT_TRUE(out.final_world.module("B1").posture.is_upright());
    EXPECT_TRUE(out.final_world.connections.empty());
    EXPECT_EQ(out.report.rescue_success, true);
    EXPECT_EQ(out.report.speed("rescued_module"), 6.0);
}

TEST(Experiments, RescueIsInfeasibleWithoutAWheelInRange)
{
    auto script = default_rescue_script();
    for (auto& m : script.modules) {
        if (m.kind == ModuleKind::ActiveWheel) m.pose.x = 10.0;
    }
    const auto out = run_scenario(script);
    EXPECT_EQ(out.status, RunStatus::ScenarioFailure);
    EXPECT_TRUE(out.log.contains("RescueInfeasible"));
    EXPECT_EQ(out.report.rescue_success, false);
}

TEST(Experiments, BuiltinsMatchGoldenFiles)
{
    for (const std::string name : {"assembly", "rescue"}) {
        const auto out = run_scenario(parse_scenario(R"({"builtin": ")" + name + R"("})", name));
        EXPECT_EQ(event_log_jsonl(out.log), slurp(std::string(HETEROSIM_GOLDEN_DIR) + "/" + name + ".jsonl")) << name;
        EXPECT_EQ(report_json(out.report), slurp(std::string(HETEROSIM_GOLDEN_DIR) + "/" + name + ".report.json"))
            << name;
    }
}

TEST(Experiments, SummarizeCountsLiftedCapacity)
{
    World w;
    auto a = make_module("A", ModuleKind::Backbone, w.config);
    a.lifted = true;
    a.battery_soc = 0.5;
    w.add_module(a);
    w.add_module(make_module("B", ModuleKind::Scout, w.config, Pose{5.0, 0.0, Heading(0)}));
    const auto r = summarize(w);
    ASSERT_EQ(r.organisms.size(), 2u);
    EXPECT_EQ(r.organisms[0].non_driving_capacity_wh, 33.0);
    EXPECT_EQ(r.organisms[0].available_wh, 16.5);
    EXPECT_EQ(r.total_mips, 6200);
    EXPECT_EQ(r.total_wh, 49.5);
}
