#include "heterosim/mechanics.hpp"

#include "heterosim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace heterosim {

const char* to_string(Joint joint) { return joint == Joint::Bend ? "Bend" : "Rotation"; }

double required_lift_torque(std::span<const double> masses_kg, double pitch_m)
{
    double total = 0.0;
    for (std::size_t i = 0; i < masses_kg.size(); ++i) {
        total += masses_kg[i] * kGravity * (static_cast<double>(i + 1) * pitch_m);
    }
    return total;
}

LiftVerdict lift_feasible(const World& world, const LiftQuery& query)
{
    const auto& lifter = world.module(query.lifter);
    if (!lifter.spec.has_joints) {
        throw MechanicsError(MechanicsFault::NoJoint, "'" + query.lifter + "' has no joint to lift with");
    }
    if (query.chain.empty()) throw Error("lift query needs a non-empty chain");
    if (!query.lever_arms_m.empty() && query.lever_arms_m.size() != query.chain.size()) {
        throw Error("lever arm overrides must match the chain length");
    }

    std::set<ModuleId> visited{query.lifter};
    const ModuleId* previous = &query.lifter;
    double required = 0.0;
    for (std::size_t i = 0; i < query.chain.size(); ++i) {
        const auto& id = query.chain[i];
        if (!visited.insert(id).second) throw Error("lift chain revisits '" + id + "'");
        if (!world.find_link(*previous, id)) {
            throw Error("lift chain is not docked between '" + *previous + "' and '" + id + "'");
        }
        const double arm = query.lever_arms_m.empty() ? static_cast<double>(i + 1) * world.config.module_pitch
                                                      : query.lever_arms_m[i];
        required += world.module(id).spec.mass_kg * kGravity * arm;
        previous = &id;
    }

    return {required <= lifter.spec.max_torque_nm, required, lifter.spec.max_torque_nm};
}

JointMotion actuate_joint(const World& world, const ModuleId& module, Joint joint, double target_deg,
                          std::span<const ModuleId> attached_chain)
{
    const auto& m = world.module(module);
    if (!m.spec.has_joints) throw MechanicsError(MechanicsFault::NoJoint, "'" + module + "' has no joints");
    const double limit = joint == Joint::Bend ? m.spec.bend_limit_deg : m.spec.rotation_limit_deg;
    if (!std::isfinite(target_deg) || std::abs(target_deg) > limit + 1e-9) {
        throw MechanicsError(MechanicsFault::JointLimitExceeded,
                             std::string(to_string(joint)) + " target " + std::to_string(target_deg) +
                                 " outside +/-" + std::to_string(limit));
    }
    if (!attached_chain.empty()) {
        LiftQuery q{module, joint, {attached_chain.begin(), attached_chain.end()}, {}};
        auto verdict = lift_feasible(world, q);
        if (!verdict.feasible) {
            throw MechanicsError(MechanicsFault::TorqueExceeded, "needs " + std::to_string(verdict.required_nm) +
                                                                     " N*m, has " +
                                                                     std::to_string(verdict.available_nm));
        }
    }
    const double current = joint == Joint::Bend ? m.joint_bend_deg : m.joint_rotation_deg;
    return {std::abs(target_deg - current) / m.spec.actuation_speed_deg_s, target_deg};
}

double organism_speed(const World& world, const Organism& organism)
{
    std::vector<const ModuleState*> ground;
    for (const auto& id : organism) {
        const auto& m = world.module(id);
        if (!m.lifted) ground.push_back(&m);
    }
    if (ground.empty()) return 0.0;

    const bool carrying = std::all_of(ground.begin(), ground.end(), [](const ModuleState* m) {
        return m->kind() == ModuleKind::ActiveWheel && m->can_self_locomote();
    });

    double speed = std::numeric_limits<double>::infinity();
    for (const auto* m : ground) {
        if (carrying || m->can_self_locomote()) speed = std::min(speed, m->spec.locomotion_speed_cm_s);
    }
    return std::isfinite(speed) ? speed : 0.0;
}

World set_posture(const World& world, const ModuleId& module, Posture posture)
{
    World next = world;
    auto& m = next.module(module);
    if (!posture.is_upright()) {
        if (posture.ground_port < 0 || posture.ground_port >= static_cast<int>(m.ports.size())) {
            throw Error("ground port " + std::to_string(posture.ground_port) + " out of range for '" + module + "'");
        }
    }
    for (std::size_t p = 0; p < m.ports.size(); ++p) {
        if (std::holds_alternative<PortDisabled>(m.ports[p])) m.ports[p] = PortFree{};
    }
    if (!posture.is_upright()) {
        auto& status = m.ports[static_cast<std::size_t>(posture.ground_port)];
        if (!std::holds_alternative<PortLocked>(status)) status = PortDisabled{};
        m.driving = false;
    }
    m.posture = posture;
    return next;
}

}  // namespace heterosim
