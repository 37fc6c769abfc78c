#include "heterosim/error.hpp"

namespace heterosim {

const char* to_string(DockRejection reason)
{
    switch (reason) {
    case DockRejection::PortBusy: return "PortBusy";
    case DockRejection::ShapeIncompatible: return "ShapeIncompatible";
    case DockRejection::NoActiveLocker: return "NoActiveLocker";
    case DockRejection::BadOrientation: return "BadOrientation";
    case DockRejection::SelfDock: return "SelfDock";
    case DockRejection::NotAdjacent: return "NotAdjacent";
    case DockRejection::NoSuchConnection: return "NoSuchConnection";
    }
    return "Unknown";
}

DockingError::DockingError(DockRejection reason, const std::string& detail)
    : Error(detail.empty() ? std::string(to_string(reason))
                           : std::string(to_string(reason)) + ": " + detail),
      reason_(reason)
{
}

const char* to_string(PowerFault fault)
{
    switch (fault) {
    case PowerFault::InsufficientSupply: return "InsufficientSupply";
    case PowerFault::NoSupplier: return "NoSupplier";
    }
    return "Unknown";
}

PowerError::PowerError(PowerFault fault, const std::string& detail)
    : Error(std::string(to_string(fault)) + ": " + detail), fault_(fault)
{
}

const char* to_string(MechanicsFault fault)
{
    switch (fault) {
    case MechanicsFault::JointLimitExceeded: return "JointLimitExceeded";
    case MechanicsFault::TorqueExceeded: return "TorqueExceeded";
    case MechanicsFault::NoJoint: return "NoJoint";
    }
    return "Unknown";
}

MechanicsError::MechanicsError(MechanicsFault fault, const std::string& detail)
    : Error(std::string(to_string(fault)) + ": " + detail), fault_(fault)
{
}

DeadBatteryError::DeadBatteryError(const std::string& module_id)
    : Error("DeadBattery: module '" + module_id + "' has an empty battery")
{
}

ParseError::ParseError(const std::string& message, std::size_t line, std::string field)
    : Error(message), line_(line), field_(std::move(field))
{
}

ValidationError::ValidationError(std::string entry, const std::string& message)
    : Error(entry + ": " + message), entry_(std::move(entry))
{
}

}  // namespace heterosim
