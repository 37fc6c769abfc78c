#pragma once

#include "heterosim/model.hpp"

#include <map>
#include <vector>

namespace heterosim {

/// Six-cell LiPo pack with a linear open-circuit voltage curve.
struct BatteryModel {
    int cells = 6;
    double energy_full_wh = 33.0;
    double v_full = 25.2;
    double v_empty = 19.8;
    double internal_resistance_ohm = 0.1;

    /// V_oc = v_empty + soc * (v_full - v_empty). Throws Error for soc
    /// outside [0, 1].
    double open_circuit_voltage(double soc) const;
};

BatteryModel battery_model(const SimConfig& config);

/// Default pack: 19.8 V empty, 25.2 V full.
double open_circuit_voltage(double soc);

/// One module's electrical situation on the organism bus.
struct BusNode {
    ModuleId id;
    double load_w = 0.0;
    double open_circuit_v = 0.0;
    bool has_battery = false;
    bool sharing_on = true;
    double supply_cap_a = 8.0;  // limiter, possibly tightened by remaining charge
    double charge_cap_a = 0.0;  // sharing-off inward current cap
};

struct BusProblem {
    std::vector<BusNode> nodes;
    double internal_resistance_ohm = 0.1;
    double limiter_current_a = 8.0;
    double v_min = 19.8;
    double v_max = 25.2;
};

struct ModuleFlow {
    double supplier_current_a = 0.0;  // exported into the bus
    double consumer_current_a = 0.0;  // load_w / bus voltage
    double charge_current_a = 0.0;    // drawn from the bus into the battery
    bool limiter_tripped = false;
    std::vector<double> port_currents_a;  // signed, + = outflow through that port

    double net_outflow_a() const { return supplier_current_a - consumer_current_a - charge_current_a; }
};

struct BusSolution {
    double bus_voltage = 0.0;
    std::map<ModuleId, ModuleFlow> flows;

    double total_supply_a() const;
    double total_demand_a() const;  // loads plus recharge
};

/// Bus-current mismatch at voltage v: supply - loads - recharge.
double bus_current_balance(const BusProblem& problem, double v);

/// Single-node solve. Finds the highest bus voltage in [v_min, v_max] at
/// which supply meets demand; suppliers follow (V_oc - V)/R clipped to their
/// cap, sharing-off modules only take current inward. Port currents are left
/// empty. Throws PowerError(NoSupplier) when demand exists but nothing may
/// export, PowerError(InsufficientSupply) when no balancing voltage exists.
BusSolution solve_bus(const BusProblem& problem);

/// Builds the bus problem for one organism from world state. A positive
/// horizon also caps supply and recharge so no battery crosses empty or full
/// within that many seconds.
BusProblem bus_problem(const World& world, const Organism& organism, double horizon_s = 0.0);

/// solve_bus on the organism, with per-port currents routed along a
/// breadth-first spanning tree rooted at the smallest member id.
BusSolution solve_bus(const World& world, const Organism& organism, double horizon_s = 0.0);

/// Integrates one organism's solution over dt into battery charge and the
/// world's energy tally. Modules left empty drop their loads.
void apply_bus_step(World& world, const Organism& organism, const BusSolution& solution, double dt);

/// Solves and integrates every organism; propagates PowerError.
World step_energy(const World& world, double dt);

/// Sum of soc * full capacity over the members, in Wh.
double total_available_energy(const World& world, const Organism& organism);

}  // namespace heterosim
