#include "heterosim/error.hpp"
#include "heterosim/io.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace heterosim;

TEST(Io, ParsesAFullScenario)
{
    const auto s = parse_scenario(R"({
      "name": "demo",
      "config": {"dt": 0.05, "trace_phases": true},
      "shedding": "shed",
      "modules": [
        {"id": "A", "kind": "Backbone", "x": 0.0, "y": 0.0, "heading": 90, "soc": 0.5, "sharing": false},
        {"id": "B", "kind": "Backbone", "x": 0.105, "fallen_on": 2},
        {"id": "P", "kind": "Passive", "x": 1.0, "passive": {"ports": 3, "mass_kg": 0.7, "active_lock": true}}
      ],
      "connections": [{"a": "A", "port_a": 1, "b": "B", "port_b": 3, "orientation": 90}],
      "timeline": [
        {"tick": 4, "module": "A", "directive": {"type": "ActuateJoint", "joint": "Bend", "target": 30}},
        {"tick": 1, "module": "B", "directive": {"type": "SendWired", "dst": "A", "payload": "x"}}
      ]
    })");
    EXPECT_EQ(s.name, "demo");
    EXPECT_EQ(s.config.dt, 0.05);
    EXPECT_TRUE(s.config.trace_phases);
    EXPECT_EQ(s.shedding, ShedPolicy::Shed);
    ASSERT_EQ(s.modules.size(), 3u);
    EXPECT_EQ(s.modules[0].pose.heading.degrees(), 90);
    EXPECT_FALSE(s.modules[0].sharing_on);
    EXPECT_EQ(s.modules[1].posture, Posture::fallen_on(2));
    ASSERT_TRUE(s.modules[2].passive);
    EXPECT_EQ(s.modules[2].passive->num_ports, 3);
    ASSERT_EQ(s.connections.size(), 1u);
    EXPECT_EQ(s.connections[0].orientation_deg, 90);
    ASSERT_EQ(s.timeline.size(), 2u);
    EXPECT_EQ(s.timeline[0].tick, 1) << "timeline is sorted";
    EXPECT_TRUE(std::holds_alternative<SendWired>(s.timeline[0].directive));
}

TEST(Io, BuiltinWithoutModulesUsesTheDefaultLayout)
{
    const auto s = parse_scenario(R"({"builtin": "assembly"})");
    EXPECT_EQ(s.builtin, BuiltinExperiment::Assembly);
    EXPECT_EQ(s.modules.size(), 4u);
    EXPECT_EQ(s.connections.size(), 1u);
    EXPECT_THROW(parse_scenario(R"({"builtin": "parade"})"), ParseError);
}

TEST(Io, MalformedJsonReportsTheLine)
{
    try {
        parse_scenario("{\n  \"name\": \"x\",\n  \"modules\": [\n", "broken.json");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(std::string(e.what()).find("broken.json:4"), std::string::npos);
    }
}

TEST(Io, FieldErrorsNameTheField)
{
    auto field_of = [](const char* text) {
        try {
            parse_scenario(text);
        } catch (const ParseError& e) {
            return e.field();
        }
        return std::string("<no error>");
    };
    EXPECT_EQ(field_of(R"({"modules": [{"id": "A", "kind": "Tank"}]})"), "modules[0].kind");
    EXPECT_EQ(field_of(R"({"modules": [{"id": "A"}]})"), "modules[0].kind");
    EXPECT_EQ(field_of(R"({"modules": [{"id": "A", "kind": "Scout", "x": "near"}]})"), "modules[0].x");
    EXPECT_EQ(field_of(R"({"colour": "red"})"), "colour");
    EXPECT_EQ(field_of(R"({"modules": [{"id": "A", "kind": "Scout"}],
                           "timeline": [{"tick": 0, "module": "A", "directive": {"type": "Fly"}}]})"),
              "timeline[0].directive.type");
    EXPECT_EQ(field_of(R"({"config": {"dt": "slow"}})"), "config.dt");
    EXPECT_THROW(parse_scenario(R"({"config": {"dt": -1}})"), ValidationError);
    EXPECT_THROW(parse_scenario(R"({"modules": [{"id": "A", "kind": "Scout", "soc": 2}]})"), ValidationError);
}

TEST(Io, EventLinesHaveFixedKeyOrder)
{
    Event e{12, 1.2, "Docked", {"W1", "B1"}, {{"connection", std::int64_t{3}}, {"ok", true}, {"v", 0.5}, {"s", std::string("x")}}};
    EXPECT_EQ(event_jsonl_line(e),
              R"({"tick":12,"t":1.2,"event":"Docked","subjects":["W1","B1"],"data":{"connection":3,"ok":true,"v":0.5,"s":"x"}})");
    EventLog log;
    log.append(e);
    log.append(e);
    EXPECT_EQ(event_log_jsonl(log), event_jsonl_line(e) + "\n" + event_jsonl_line(e) + "\n");
}

TEST(Io, ReportFieldsAndNullRescueFlag)
{
    MetricsReport r;
    r.total_mips = 3100;
    r.total_wh = 33.0;
    r.speeds = {{"before_lift", 6.0}};
    OrganismMetrics o;
    o.members = {"A"};
    r.organisms.push_back(o);
    const auto doc = nlohmann::ordered_json::parse(report_json(r));
    std::vector<std::string> keys;
    for (const auto& [k, v] : doc.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"organisms", "total_mips", "total_wh", "speeds", "rescue_success"}));
    EXPECT_TRUE(doc["rescue_success"].is_null());
    EXPECT_EQ(doc["speeds"]["before_lift"], 6.0);
    r.rescue_success = true;
    EXPECT_TRUE(nlohmann::json::parse(report_json(r))["rescue_success"].get<bool>());
}

TEST(Io, ConfigFileAppliesKeys)
{
    SimConfig c;
    apply_config_json(c, R"({"wireless_range": 3.5, "max_ticks": 10})", "defaults.json");
    EXPECT_EQ(c.wireless_range, 3.5);
    EXPECT_EQ(c.max_ticks, 10);
    EXPECT_THROW(apply_config_json(c, R"({"wireless_range": )", "defaults.json"), ParseError);
    EXPECT_THROW(apply_config_json(c, R"({"nope": 1})", "defaults.json"), ValidationError);
}

TEST(Io, ScenarioConfigOverridesDefaults)
{
    SimConfig defaults;
    defaults.wireless_range = 9.0;
    defaults.dt = 0.2;
    const auto s = parse_scenario(R"({"config": {"dt": 0.05}})", "x", defaults);
    EXPECT_EQ(s.config.wireless_range, 9.0);
    EXPECT_EQ(s.config.dt, 0.05);
}

TEST(Io, RunReturnsConfigErrorForMissingFile)
{
    std::ostringstream out, err;
    RunConfig rc;
    rc.scenario_path = "/nonexistent/scenario.json";
    EXPECT_EQ(run(rc, out, err), kExitConfigError);
    EXPECT_NE(err.str().find("cannot open"), std::string::npos);
}
