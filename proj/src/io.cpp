#include "heterosim/io.hpp"

#include "heterosim/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace heterosim {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t line_of_byte(std::string_view text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

    const json& node() const { return node_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& field, const std::string& message) const
    {
        throw ParseError(field_path(field) + ": " + message, 0, field_path(field));
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    Reader child(const std::string& key) const
    {
        if (!has(key)) fail(key, "missing field");
        return {node_.at(key), field_path(key)};
    }

    std::string string(const std::string& key) const
    {
        const auto& v = require(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }
    std::string string_or(const std::string& key, std::string fallback) const
    {
        return has(key) ? string(key) : std::move(fallback);
    }

    double number(const std::string& key) const
    {
        const auto& v = require(key);
        if (!v.is_number()) fail(key, "expected a number");
        return v.get<double>();
    }
    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::int64_t integer(const std::string& key) const
    {
        const auto& v = require(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const
    {
        return has(key) ? integer(key) : fallback;
    }
    int small_integer(const std::string& key) const
    {
        const auto value = integer(key);
        if (value < -1'000'000 || value > 1'000'000) fail(key, "integer out of range");
        return static_cast<int>(value);
    }
    int small_integer_or(const std::string& key, int fallback) const
    {
        return has(key) ? small_integer(key) : fallback;
    }

    bool boolean(const std::string& key) const
    {
        const auto& v = require(key);
        if (!v.is_boolean()) fail(key, "expected true or false");
        return v.get<bool>();
    }
    bool boolean_or(const std::string& key, bool fallback) const { return has(key) ? boolean(key) : fallback; }

    std::vector<Reader> array(const std::string& key) const
    {
        const auto& v = require(key);
        if (!v.is_array()) fail(key, "expected an array");
        std::vector<Reader> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], field_path(key) + "[" + std::to_string(i) + "]");
        return out;
    }

    void expect_object() const
    {
        if (!node_.is_object()) throw ParseError(path_or_root() + ": expected an object", 0, path_);
    }

    void reject_unknown(std::initializer_list<const char*> allowed) const
    {
        for (const auto& [key, value] : node_.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                fail(key, "unknown field");
            }
        }
    }

private:
    const json& require(const std::string& key) const
    {
        if (!has(key)) fail(key, "missing field");
        return node_.at(key);
    }
    std::string field_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string path_or_root() const { return path_.empty() ? "<root>" : path_; }

    const json& node_;
    std::string path_;
};

std::string config_value_text(const Reader& r, const std::string& key, const json& value)
{
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_number()) return value.dump();
    r.fail(key, "expected a number or boolean");
}

void apply_config_object(SimConfig& config, const Reader& r)
{
    r.expect_object();
    for (const auto& [key, value] : r.node().items()) {
        apply_override(config, key, config_value_text(r, key, value));
    }
}

Joint parse_joint(const Reader& r, const std::string& key)
{
    const auto name = r.string(key);
    if (name == "Bend") return Joint::Bend;
    if (name == "Rotation") return Joint::Rotation;
    r.fail(key, "expected Bend or Rotation");
}

Directive parse_directive(const Reader& r)
{
    r.expect_object();
    const auto type = r.string("type");
    if (type == "Move") {
        r.reject_unknown({"type", "distance"});
        return Move{r.number("distance")};
    }
    if (type == "Turn") {
        r.reject_unknown({"type", "degrees"});
        return Turn{r.small_integer("degrees")};
    }
    if (type == "DockWith") {
        r.reject_unknown({"type", "peer", "port", "peer_port", "orientation"});
        return DockWith{r.string("peer"), r.small_integer("port"), r.small_integer("peer_port"),
                        r.small_integer_or("orientation", 0)};
    }
    if (type == "Undock") {
        r.reject_unknown({"type", "port"});
        return Undock{r.small_integer("port")};
    }
    if (type == "ActuateJoint") {
        r.reject_unknown({"type", "joint", "target"});
        return ActuateJoint{parse_joint(r, "joint"), r.number("target")};
    }
    if (type == "SetSharing") {
        r.reject_unknown({"type", "on"});
        return SetSharing{r.boolean("on")};
    }
    if (type == "LiftChain") {
        r.reject_unknown({"type", "chain"});
        LiftChain lift;
        for (const auto& item : r.array("chain")) {
            if (!item.node().is_string()) throw ParseError(item.path() + ": expected a module id", 0, item.path());
            lift.chain.push_back(item.node().get<std::string>());
        }
        return lift;
    }
    if (type == "LowerChain") {
        r.reject_unknown({"type"});
        return LowerChain{};
    }
    if (type == "Broadcast") {
        r.reject_unknown({"type", "payload"});
        return Broadcast{r.string_or("payload", "")};
    }
    if (type == "SendWired") {
        r.reject_unknown({"type", "dst", "payload"});
        return SendWired{r.string("dst"), r.string_or("payload", "")};
    }
    if (type == "Wait") {
        r.reject_unknown({"type", "ticks"});
        return Wait{r.integer_or("ticks", 1)};
    }
    r.fail("type", "unknown directive '" + type + "'");
}

ModuleSetup parse_module(const Reader& r)
{
    r.expect_object();
    r.reject_unknown({"id", "kind", "x", "y", "heading", "soc", "sharing", "fallen_on", "passive"});
    ModuleSetup m;
    m.id = r.string("id");
    const auto kind_name = r.string("kind");
    auto kind = parse_module_kind(kind_name);
    if (!kind) r.fail("kind", "unknown module kind '" + kind_name + "'");
    m.kind = *kind;
    m.pose.x = r.number_or("x", 0.0);
    m.pose.y = r.number_or("y", 0.0);
    const int heading = r.small_integer_or("heading", 0);
    if (heading % 90 != 0) r.fail("heading", "must be a multiple of 90");
    m.pose.heading = Heading(heading);
    m.soc = r.number_or("soc", 1.0);
    m.sharing_on = r.boolean_or("sharing", true);
    if (r.has("fallen_on")) m.posture = Posture::fallen_on(r.small_integer("fallen_on"));
    if (r.has("passive")) {
        auto p = r.child("passive");
        p.expect_object();
        p.reject_unknown({"ports", "mass_kg", "compute_mips", "energy_wh", "active_lock"});
        PassiveParams params;
        params.num_ports = p.small_integer_or("ports", params.num_ports);
        params.mass_kg = p.number_or("mass_kg", params.mass_kg);
        params.compute_mips = p.integer_or("compute_mips", params.compute_mips);
        params.battery_energy_wh = p.number_or("energy_wh", params.battery_energy_wh);
        params.can_actively_lock = p.boolean_or("active_lock", params.can_actively_lock);
        m.passive = params;
    }
    return m;
}

ordered_json value_json(const EventValue& value)
{
    return std::visit([](const auto& v) { return ordered_json(v); }, value);
}

}  // namespace

std::vector<std::string> builtin_names() { return {"assembly", "rescue"}; }

void apply_config_json(SimConfig& config, std::string_view text, const std::string& origin)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ":" + std::to_string(line_of_byte(text, e.byte)) + ": " + e.what(),
                         line_of_byte(text, e.byte));
    }
    apply_config_object(config, Reader(doc, ""));
}

ScenarioScript parse_scenario(std::string_view text, const std::string& origin, const SimConfig& defaults)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto line = line_of_byte(text, e.byte);
        throw ParseError(origin + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")", line);
    }

    Reader root(doc, "");
    root.expect_object();
    root.reject_unknown({"name", "builtin", "config", "shedding", "modules", "connections", "timeline"});

    ScenarioScript script;
    if (root.has("builtin")) {
        const auto name = root.string("builtin");
        if (name == "assembly") {
            script = default_assembly_script();
        } else if (name == "rescue") {
            script = default_rescue_script();
        } else {
            root.fail("builtin", "unknown built-in '" + name + "' (expected assembly or rescue)");
        }
    }
    script.name = root.string_or("name", script.name.empty() ? origin : script.name);
    script.config = defaults;
    if (root.has("config")) apply_config_object(script.config, root.child("config"));

    if (root.has("shedding")) {
        const auto policy = root.string("shedding");
        if (policy == "halt") {
            script.shedding = ShedPolicy::Halt;
        } else if (policy == "shed") {
            script.shedding = ShedPolicy::Shed;
        } else {
            root.fail("shedding", "expected halt or shed");
        }
    }

    if (root.has("modules")) {
        script.modules.clear();
        script.connections.clear();
        for (const auto& m : root.array("modules")) script.modules.push_back(parse_module(m));
    }
    if (root.has("connections")) {
        script.connections.clear();
        for (const auto& c : root.array("connections")) {
            c.expect_object();
            c.reject_unknown({"a", "port_a", "b", "port_b", "orientation"});
            script.connections.push_back({c.string("a"), c.small_integer("port_a"), c.string("b"),
                                          c.small_integer("port_b"), c.small_integer_or("orientation", 0)});
        }
    }
    if (root.has("timeline")) {
        for (const auto& t : root.array("timeline")) {
            t.expect_object();
            t.reject_unknown({"tick", "module", "directive"});
            script.timeline.push_back({t.integer("tick"), t.string("module"), parse_directive(t.child("directive"))});
        }
    }

    validate_script(script);
    return script;
}

ScenarioScript load_scenario(const std::filesystem::path& path, const SimConfig& defaults)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open scenario file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path.string(), defaults);
}

std::string event_jsonl_line(const Event& e)
{
    ordered_json line;
    line["tick"] = e.tick;
    line["t"] = e.t;
    line["event"] = e.type;
    line["subjects"] = e.subjects;
    ordered_json data = ordered_json::object();
    for (const auto& [key, value] : e.data) data[key] = value_json(value);
    line["data"] = std::move(data);
    return line.dump();
}

std::string event_log_jsonl(const EventLog& log)
{
    std::string out;
    for (const auto& e : log.events()) {
        out += event_jsonl_line(e);
        out += '\n';
    }
    return out;
}

std::string report_json(const MetricsReport& report)
{
    ordered_json doc;
    ordered_json organisms = ordered_json::array();
    for (const auto& o : report.organisms) {
        ordered_json entry;
        entry["members"] = o.members;
        entry["mips"] = o.mips;
        entry["cpu_nodes"] = o.cpu_nodes;
        entry["available_wh"] = o.available_wh;
        entry["non_driving_capacity_wh"] = o.non_driving_capacity_wh;
        entry["speed_cm_s"] = o.speed_cm_s;
        organisms.push_back(std::move(entry));
    }
    doc["organisms"] = std::move(organisms);
    doc["total_mips"] = report.total_mips;
    doc["total_wh"] = report.total_wh;
    ordered_json speeds = ordered_json::object();
    for (const auto& [label, value] : report.speeds) speeds[label] = value;
    doc["speeds"] = std::move(speeds);
    doc["rescue_success"] = report.rescue_success ? ordered_json(*report.rescue_success) : ordered_json(nullptr);
    return doc.dump(2) + "\n";
}

namespace {

bool write_file(const std::filesystem::path& path, const std::string& content, std::ostream& err)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        err << "error: cannot write '" << path.string() << "'\n";
        return false;
    }
    out << content;
    return static_cast<bool>(out);
}

SimConfig environment_defaults()
{
    SimConfig config;
    const char* path = std::getenv("HETEROSIM_CONFIG");
    if (path == nullptr || *path == '\0') return config;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(std::string("cannot open HETEROSIM_CONFIG file '") + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_json(config, buffer.str(), path);
    return config;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    ScenarioScript script;
    try {
        script = load_scenario(config.scenario_path, environment_defaults());
        for (const auto& [key, value] : config.overrides) apply_override(script.config, key, value);
        validate_script(script);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    }

    RunOutcome outcome;
    try {
        outcome = run_scenario(script);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitScenarioFailure;
    }

    if (!config.out_path.empty() && !write_file(config.out_path, event_log_jsonl(outcome.log), err)) {
        return kExitConfigError;
    }
    const auto report = report_json(outcome.report);
    if (config.report_path.empty()) {
        out << report;
    } else if (!write_file(config.report_path, report, err)) {
        return kExitConfigError;
    }
    if (config.verbosity > 0) {
        err << script.name << ": " << outcome.log.size() << " events over " << outcome.final_world.tick
            << " ticks, status " << (outcome.status == RunStatus::Success ? "success" : "failure") << "\n";
    }
    if (outcome.status != RunStatus::Success) {
        err << "scenario failed: " << outcome.failure << "\n";
        return kExitScenarioFailure;
    }
    return kExitSuccess;
}

int validate_scenario_file(const std::filesystem::path& path, std::ostream& out, std::ostream& err)
{
    try {
        auto script = load_scenario(path, environment_defaults());
        out << script.name << ": ok (" << script.modules.size() << " modules, " << script.timeline.size()
            << " timeline entries, builtin " << to_string(script.builtin) << ")\n";
        return kExitSuccess;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

}  // namespace heterosim
