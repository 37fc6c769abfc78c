#pragma once

#include "heterosim/model.hpp"

#include <span>
#include <vector>

namespace heterosim {

inline constexpr double kGravity = 9.81;  // m/s^2

enum class Joint { Bend, Rotation };

const char* to_string(Joint joint);

/// Modules cantilevered beyond one of the lifter's joints, nearest first.
/// lever_arms_m overrides the default arm (position * module_pitch) per
/// module when non-empty.
struct LiftQuery {
    ModuleId lifter;
    Joint joint = Joint::Bend;
    std::vector<ModuleId> chain;
    std::vector<double> lever_arms_m;
};

struct LiftVerdict {
    bool feasible = false;
    double required_nm = 0.0;
    double available_nm = 0.0;
};

/// Static moment of a chain: sum of m_i * g * (i * pitch), i counted from 1.
double required_lift_torque(std::span<const double> masses_kg, double pitch_m);

/// Quasi-static lift check against the lifter's torque limit. Throws Error
/// when the chain is empty or is not a docked simple path starting at the
/// lifter; MechanicsError(NoJoint) when the lifter has no joints.
LiftVerdict lift_feasible(const World& world, const LiftQuery& query);

struct JointMotion {
    double duration_s = 0.0;
    double target_deg = 0.0;
};

/// Duration of moving `joint` to `target_deg` at the platform's actuation
/// speed. Throws MechanicsError for JointLimitExceeded, NoJoint, or
/// TorqueExceeded when `attached_chain` cannot be held.
JointMotion actuate_joint(const World& world, const ModuleId& module, Joint joint, double target_deg,
                          std::span<const ModuleId> attached_chain = {});

/// Ground speed of an organism in cm/s. Active Wheels carrying everything
/// else off the ground move at wheel speed; otherwise the slowest ground
/// driver sets the pace.
double organism_speed(const World& world, const Organism& organism);

/// FallenOnSide disables the ground-facing port (unless it is Locked) and the
/// module's own drive; Upright re-enables both.
World set_posture(const World& world, const ModuleId& module, Posture posture);

}  // namespace heterosim
