#include "heterosim/powerbus.hpp"

#include "heterosim/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

namespace heterosim {

double BatteryModel::open_circuit_voltage(double soc) const
{
    if (!(soc >= 0.0 && soc <= 1.0)) throw Error("state of charge out of range: " + std::to_string(soc));
    return v_empty + soc * (v_full - v_empty);
}

BatteryModel battery_model(const SimConfig& config)
{
    BatteryModel model;
    model.energy_full_wh = config.battery_energy_wh;
    model.internal_resistance_ohm = config.internal_resistance_ohm;
    return model;
}

double open_circuit_voltage(double soc) { return BatteryModel{}.open_circuit_voltage(soc); }

double BusSolution::total_supply_a() const
{
    double total = 0.0;
    for (const auto& [id, f] : flows) total += f.supplier_current_a;
    return total;
}

double BusSolution::total_demand_a() const
{
    double total = 0.0;
    for (const auto& [id, f] : flows) total += f.consumer_current_a + f.charge_current_a;
    return total;
}

namespace {

bool is_supplier(const BusNode& n) { return n.has_battery && n.sharing_on && n.supply_cap_a > 0.0; }
bool is_charger(const BusNode& n) { return n.has_battery && !n.sharing_on && n.charge_cap_a > 0.0; }

double supply_current(const BusNode& n, double v, double r)
{
    if (!is_supplier(n)) return 0.0;
    return std::clamp((n.open_circuit_v - v) / r, 0.0, n.supply_cap_a);
}

double charge_current(const BusNode& n, double v, double r)
{
    if (!is_charger(n)) return 0.0;
    return std::clamp((v - n.open_circuit_v) / r, 0.0, n.charge_cap_a);
}

// Largest v in [lo, hi] with f(v) >= 0, given f(lo) >= 0 > f(hi).
double bisect(const std::function<double(double)>& f, double lo, double hi)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

// Maximizer of a concave function on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b)
{
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < 200 && (b - a) > 1e-13; ++i) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        }
    }
    return fc < fd ? d : c;
}

}  // namespace

double bus_current_balance(const BusProblem& p, double v)
{
    double balance = 0.0;
    for (const auto& n : p.nodes) {
        balance += supply_current(n, v, p.internal_resistance_ohm);
        balance -= charge_current(n, v, p.internal_resistance_ohm);
        balance -= n.load_w / v;
    }
    return balance;
}

BusSolution solve_bus(const BusProblem& p)
{
    const double r = p.internal_resistance_ohm;
    double total_load = 0.0;
    double v_top = -1.0;
    for (const auto& n : p.nodes) {
        total_load += n.load_w;
        if (is_supplier(n)) v_top = std::max(v_top, n.open_circuit_v);
    }

    BusSolution solution;
    for (const auto& n : p.nodes) solution.flows.emplace(n.id, ModuleFlow{});

    if (v_top < 0.0) {
        if (total_load > 0.0) throw PowerError(PowerFault::NoSupplier, "no module exports onto the bus");
        double v_open = p.v_min;
        for (const auto& n : p.nodes) {
            if (n.has_battery) v_open = std::max(v_open, n.open_circuit_v);
        }
        solution.bus_voltage = std::min(v_open, p.v_max);
        return solution;
    }

    v_top = std::clamp(v_top, p.v_min, p.v_max);
    auto f = [&p](double v) { return bus_current_balance(p, v); };

    // f is concave between these breakpoints; scan pieces from the top down
    // for the highest voltage where supply still covers demand.
    std::set<double, std::greater<>> breaks{v_top, p.v_min};
    for (const auto& n : p.nodes) {
        const double candidates[] = {
            is_supplier(n) ? n.open_circuit_v : -1.0,
            is_supplier(n) ? n.open_circuit_v - n.supply_cap_a * r : -1.0,
            is_charger(n) ? n.open_circuit_v : -1.0,
            is_charger(n) ? n.open_circuit_v + n.charge_cap_a * r : -1.0,
        };
        for (double b : candidates) {
            if (b > p.v_min && b < v_top) breaks.insert(b);
        }
    }

    std::optional<double> root;
    if (f(v_top) >= 0.0) root = v_top;
    for (auto it = breaks.begin(); !root && std::next(it) != breaks.end(); ++it) {
        const double hi = *it;
        const double lo = *std::next(it);
        if (f(lo) >= 0.0) {
            root = bisect(f, lo, hi);
            break;
        }
        const double peak = golden_max(f, lo, hi);
        if (f(peak) >= 0.0) {
            root = bisect(f, peak, hi);
            break;
        }
    }
    if (!root) {
        throw PowerError(PowerFault::InsufficientSupply,
                         "demand of " + std::to_string(total_load) + " W exceeds limited supply");
    }

    const double v = *root;
    solution.bus_voltage = v;
    for (const auto& n : p.nodes) {
        auto& flow = solution.flows.at(n.id);
        flow.supplier_current_a = supply_current(n, v, r);
        flow.charge_current_a = charge_current(n, v, r);
        flow.consumer_current_a = n.load_w / v;
        flow.limiter_tripped = is_supplier(n) && (n.open_circuit_v - v) / r >= p.limiter_current_a;
    }
    return solution;
}

BusProblem bus_problem(const World& world, const Organism& organism, double horizon_s)
{
    const auto model = battery_model(world.config);
    BusProblem p;
    p.internal_resistance_ohm = world.config.internal_resistance_ohm;
    p.limiter_current_a = world.config.limiter_current_a;
    p.v_min = model.v_empty;
    p.v_max = model.v_full;
    for (const auto& id : organism) {
        const auto& m = world.module(id);
        BusNode n;
        n.id = id;
        n.load_w = m.load_draw_w;
        n.has_battery = m.spec.battery_energy_full_wh > 0.0;
        n.sharing_on = m.sharing_on;
        n.open_circuit_v = model.open_circuit_voltage(std::clamp(m.battery_soc, 0.0, 1.0));
        n.supply_cap_a = world.config.limiter_current_a;
        n.charge_cap_a = world.config.max_charge_current_a;
        if (horizon_s > 0.0 && n.has_battery) {
            const double joules_per_amp = n.open_circuit_v * horizon_s;
            const double stored_j = m.stored_energy_wh() * 3600.0;
            const double room_j = (m.spec.battery_energy_full_wh - m.stored_energy_wh()) * 3600.0;
            n.supply_cap_a = std::min(n.supply_cap_a, stored_j / joules_per_amp);
            n.charge_cap_a = std::min(n.charge_cap_a, std::max(0.0, room_j) / joules_per_amp);
        }
        p.nodes.push_back(std::move(n));
    }
    return p;
}

BusSolution solve_bus(const World& world, const Organism& organism, double horizon_s)
{
    auto solution = solve_bus(bus_problem(world, organism, horizon_s));

    for (const auto& id : organism) {
        solution.flows.at(id).port_currents_a.assign(world.module(id).ports.size(), 0.0);
    }
    if (organism.size() < 2) return solution;

    // Breadth-first spanning tree; each tree edge carries its subtree's net
    // outflow toward the root. Edges closing a cycle carry nothing.
    struct TreeEdge {
        ModuleId child;
        ModuleId parent;
        int child_port;
        int parent_port;
    };
    std::vector<TreeEdge> order;
    std::set<ModuleId> members(organism.begin(), organism.end());
    std::set<ModuleId> seen{organism.front()};
    std::deque<ModuleId> queue{organism.front()};
    while (!queue.empty()) {
        const auto current = queue.front();
        queue.pop_front();
        for (auto cid : world.connections_of(current)) {
            const auto& c = world.connections.at(cid);
            const auto& peer = c.peer_of(current);
            if (!members.count(peer) || !seen.insert(peer).second) continue;
            const bool current_is_a = c.module_a == current;
            order.push_back({peer, current, current_is_a ? c.port_b : c.port_a, current_is_a ? c.port_a : c.port_b});
            queue.push_back(peer);
        }
    }

    std::map<ModuleId, double> subtree;
    for (const auto& id : organism) subtree[id] = solution.flows.at(id).net_outflow_a();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const double through = subtree.at(it->child);
        subtree.at(it->parent) += through;
        solution.flows.at(it->child).port_currents_a[static_cast<std::size_t>(it->child_port)] = through;
        solution.flows.at(it->parent).port_currents_a[static_cast<std::size_t>(it->parent_port)] = -through;
    }
    return solution;
}

void apply_bus_step(World& world, const Organism& organism, const BusSolution& solution, double dt)
{
    const auto model = battery_model(world.config);
    const double v_bus = solution.bus_voltage;
    for (const auto& id : organism) {
        auto& m = world.module(id);
        const auto& flow = solution.flows.at(id);
        world.energy.load_wh += m.load_draw_w * dt / 3600.0;
        const double capacity = m.spec.battery_energy_full_wh;
        if (capacity <= 0.0) continue;

        const double i_out = flow.supplier_current_a;
        const double i_in = flow.charge_current_a;
        const double voc = model.open_circuit_voltage(std::clamp(m.battery_soc, 0.0, 1.0));
        // Everything between the cell and the bus: I^2 R, plus whatever the
        // limiter or charge regulator drops once a current is clipped.
        world.energy.loss_wh += (i_out * (voc - v_bus) + i_in * (v_bus - voc)) * dt / 3600.0;
        const double delta_wh = voc * (i_in - i_out) * dt / 3600.0;
        m.battery_soc = std::clamp(m.battery_soc + delta_wh / capacity, 0.0, 1.0);
    }
    for (const auto& id : organism) {
        auto& m = world.module(id);
        if (m.spec.battery_energy_full_wh > 0.0 && m.battery_soc <= 0.0) {
            m.load_draw_w = 0.0;
            m.driving = false;
        }
    }
}

World step_energy(const World& world, double dt)
{
    if (!(dt > 0.0)) throw Error("step_energy requires dt > 0");
    World next = world;
    for (const auto& organism : connected_components(world)) {
        auto solution = solve_bus(world, organism, dt);
        apply_bus_step(next, organism, solution, dt);
    }
    return next;
}

double total_available_energy(const World& world, const Organism& organism)
{
    double total = 0.0;
    for (const auto& id : organism) total += world.module(id).stored_energy_wh();
    return total;
}

}  // namespace heterosim
