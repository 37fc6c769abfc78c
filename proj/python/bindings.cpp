#include "heterosim/commnet.hpp"
#include "heterosim/docking.hpp"
#include "heterosim/error.hpp"
#include "heterosim/experiments.hpp"
#include "heterosim/io.hpp"
#include "heterosim/mechanics.hpp"
#include "heterosim/powerbus.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace heterosim;

namespace {

SimConfig config_from(const py::dict& overrides)
{
    SimConfig config;
    for (const auto& [key, value] : overrides) {
        apply_override(config, py::str(key).cast<std::string>(),
                       py::isinstance<py::bool_>(value) ? (value.cast<bool>() ? "true" : "false")
                                                        : py::str(value).cast<std::string>());
    }
    return config;
}

py::dict flow_dict(const ModuleFlow& f)
{
    py::dict d;
    d["supplier_current_a"] = f.supplier_current_a;
    d["consumer_current_a"] = f.consumer_current_a;
    d["charge_current_a"] = f.charge_current_a;
    d["limiter_tripped"] = f.limiter_tripped;
    d["port_currents_a"] = f.port_currents_a;
    return d;
}

py::dict solution_dict(const BusSolution& s)
{
    py::dict flows;
    for (const auto& [id, f] : s.flows) flows[py::str(id)] = flow_dict(f);
    py::dict d;
    d["bus_voltage"] = s.bus_voltage;
    d["flows"] = flows;
    return d;
}

std::optional<std::string> rejection_name(const std::optional<DockRejection>& r)
{
    if (!r) return std::nullopt;
    return std::string(to_string(*r));
}

}  // namespace

PYBIND11_MODULE(_heterosim, m)
{
    m.doc() = "Heterogeneous modular robot organism simulator";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<DockingError>(m, "DockingError", base);
    py::register_exception<PowerError>(m, "PowerError", base);
    py::register_exception<MechanicsError>(m, "MechanicsError", base);
    py::register_exception<DeadBatteryError>(m, "DeadBatteryError", base);

    py::enum_<ModuleKind>(m, "ModuleKind")
        .value("Scout", ModuleKind::Scout)
        .value("Backbone", ModuleKind::Backbone)
        .value("ActiveWheel", ModuleKind::ActiveWheel)
        .value("Passive", ModuleKind::Passive);

    m.def("builtin_names", &builtin_names);
    m.def("config_keys", &config_keys);
    m.def("open_circuit_voltage", py::overload_cast<double>(&open_circuit_voltage), py::arg("soc"));
    m.def(
        "required_lift_torque",
        [](const std::vector<double>& masses, double pitch) { return required_lift_torque(masses, pitch); },
        py::arg("masses_kg"), py::arg("pitch_m") = SimConfig{}.module_pitch);

    m.def(
        "validate_scenario",
        [](const std::string& text) {
            const auto s = parse_scenario(text);
            py::dict d;
            d["name"] = s.name;
            d["builtin"] = std::string(to_string(s.builtin));
            d["modules"] = s.modules.size();
            d["timeline"] = s.timeline.size();
            return d;
        },
        py::arg("text"), "Parses and validates a scenario document; raises on error.");

    m.def(
        "run_scenario_text",
        [](const std::string& text) {
            RunOutcome outcome;
            {
                py::gil_scoped_release release;
                outcome = run_scenario(parse_scenario(text));
            }
            py::dict d;
            d["success"] = outcome.status == RunStatus::Success;
            d["failure"] = outcome.failure;
            d["event_log"] = event_log_jsonl(outcome.log);
            d["report"] = report_json(outcome.report);
            return d;
        },
        py::arg("text"),
        "Runs a scenario document. Returns success, failure, event_log (JSON Lines) and report (JSON).");

    m.def(
        "solve_bus",
        [](const std::vector<py::dict>& nodes, double r, double limiter) {
            BusProblem p;
            p.internal_resistance_ohm = r;
            p.limiter_current_a = limiter;
            for (const auto& n : nodes) {
                BusNode node;
                node.id = n["id"].cast<std::string>();
                const double soc = n.contains("soc") ? n["soc"].cast<double>() : 1.0;
                node.open_circuit_v = open_circuit_voltage(soc);
                node.has_battery = n.contains("has_battery") ? n["has_battery"].cast<bool>() : true;
                node.load_w = n.contains("load_w") ? n["load_w"].cast<double>() : 0.0;
                node.sharing_on = n.contains("sharing") ? n["sharing"].cast<bool>() : true;
                node.supply_cap_a = limiter;
                node.charge_cap_a = n.contains("charge_cap_a") ? n["charge_cap_a"].cast<double>() : 1.4;
                p.nodes.push_back(node);
            }
            return solution_dict(solve_bus(p));
        },
        py::arg("nodes"), py::arg("internal_resistance_ohm") = 0.1, py::arg("limiter_current_a") = 8.0,
        "Single-node bus solve over dicts with id, soc, load_w, sharing.");

    py::class_<World>(m, "World")
        .def(py::init([](const py::dict& overrides) {
                 World w;
                 w.config = config_from(overrides);
                 return w;
             }),
             py::arg("config") = py::dict())
        .def(
            "add_module",
            [](World& w, const std::string& id, ModuleKind kind, double x, double y, int heading) {
                w.add_module(make_module(id, kind, w.config, Pose{x, y, Heading(heading)}));
            },
            py::arg("id"), py::arg("kind"), py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("heading") = 0)
        .def(
            "set_module",
            [](World& w, const std::string& id, std::optional<double> soc, std::optional<double> load_w,
               std::optional<bool> sharing) {
                auto& mod = w.module(id);
                if (soc) mod.battery_soc = *soc;
                if (load_w) mod.load_draw_w = *load_w;
                if (sharing) mod.sharing_on = *sharing;
            },
            py::arg("id"), py::arg("soc") = py::none(), py::arg("load_w") = py::none(), py::arg("sharing") = py::none())
        .def("soc", [](const World& w, const std::string& id) { return w.module(id).battery_soc; })
        .def(
            "can_dock",
            [](const World& w, const std::string& a, int pa, const std::string& b, int pb, int o) {
                return rejection_name(can_dock(w, {a, pa, b, pb, o}));
            },
            py::arg("a"), py::arg("port_a"), py::arg("b"), py::arg("port_b"), py::arg("orientation") = 0,
            "None when the link may be formed, else the rejection reason.")
        .def(
            "dock",
            [](World& w, const std::string& a, int pa, const std::string& b, int pb, int o) {
                w = dock(w, {a, pa, b, pb, o});
            },
            py::arg("a"), py::arg("port_a"), py::arg("b"), py::arg("port_b"), py::arg("orientation") = 0)
        .def(
            "attach",
            [](World& w, const std::string& a, int pa, const std::string& b, int pb, int o) {
                w = attach(w, {a, pa, b, pb, o});
            },
            py::arg("a"), py::arg("port_a"), py::arg("b"), py::arg("port_b"), py::arg("orientation") = 0)
        .def(
            "undock",
            [](World& w, const std::string& a, const std::string& b) {
                const auto link = w.find_link(a, b);
                if (!link) throw DockingError(DockRejection::NoSuchConnection, a + " and " + b + " are not docked");
                w = undock(w, *link);
            },
            py::arg("a"), py::arg("b"))
        .def("organisms", [](const World& w) { return connected_components(w); })
        .def("wired_hops", [](const World& w, const std::string& src, const std::string& dst) {
            return wired_deliver(w, src, dst).hops;
        })
        .def("broadcast", [](const World& w, const std::string& src) { return wireless_broadcast(w, src, ""); })
        .def(
            "lift",
            [](const World& w, const std::string& lifter, const std::vector<std::string>& chain) {
                const auto v = lift_feasible(w, {lifter, Joint::Bend, chain, {}});
                return py::make_tuple(v.feasible, v.required_nm, v.available_nm);
            },
            py::arg("lifter"), py::arg("chain"), "Returns (feasible, required_nm, available_nm).")
        .def("solve_bus", [](const World& w, const std::string& member) {
            return solution_dict(solve_bus(w, organism_of(w, member)));
        })
        .def("step_energy", [](World& w, double dt) { w = step_energy(w, dt); }, py::arg("dt") = 0.1)
        .def_property_readonly("stored_energy_wh", &World::stored_energy_wh)
        .def_property_readonly("load_wh", [](const World& w) { return w.energy.load_wh; })
        .def_property_readonly("loss_wh", [](const World& w) { return w.energy.loss_wh; })
        .def_property_readonly("lock_wh", [](const World& w) { return w.energy.lock_wh; })
        .def("__len__", [](const World& w) { return w.modules.size(); });
}
