#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace heterosim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DockRejection {
    PortBusy,
    ShapeIncompatible,
    NoActiveLocker,
    BadOrientation,
    SelfDock,
    NotAdjacent,
    NoSuchConnection,
};

const char* to_string(DockRejection reason);

class DockingError : public Error {
public:
    explicit DockingError(DockRejection reason, const std::string& detail = {});
    DockRejection reason() const noexcept { return reason_; }

private:
    DockRejection reason_;
};

enum class PowerFault { InsufficientSupply, NoSupplier };

const char* to_string(PowerFault fault);

class PowerError : public Error {
public:
    PowerError(PowerFault fault, const std::string& detail);
    PowerFault fault() const noexcept { return fault_; }

private:
    PowerFault fault_;
};

enum class MechanicsFault { JointLimitExceeded, TorqueExceeded, NoJoint };

const char* to_string(MechanicsFault fault);

class MechanicsError : public Error {
public:
    MechanicsError(MechanicsFault fault, const std::string& detail);
    MechanicsFault fault() const noexcept { return fault_; }

private:
    MechanicsFault fault_;
};

class DeadBatteryError : public Error {
public:
    explicit DeadBatteryError(const std::string& module_id);
};

class UnsupportedDirective : public Error {
public:
    using Error::Error;
};

/// Malformed scenario input. Line is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::string field = {});
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string entry, const std::string& message);
    const std::string& entry() const noexcept { return entry_; }

private:
    std::string entry_;
};

}  // namespace heterosim
