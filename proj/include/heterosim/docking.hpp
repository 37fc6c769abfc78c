#pragma once

#include "heterosim/error.hpp"
#include "heterosim/model.hpp"

#include <optional>
#include <string>

namespace heterosim {

/// Port-to-port link request. Orientation is in degrees, measured from a to b.
struct DockRequest {
    ModuleId a;
    int port_a = 0;
    ModuleId b;
    int port_b = 0;
    int orientation_deg = 0;

    /// The same link seen from b. Invalid orientations are carried over
    /// unchanged so the reversed request is rejected the same way.
    DockRequest reversed() const
    {
        const int o = valid_orientation(orientation_deg) ? inverse_orientation(orientation_deg) : orientation_deg;
        return {b, port_b, a, port_a, o};
    }
};

/// Compatibility check; std::nullopt means the link may be formed.
///
/// A port is available when it is Free, Disabled (the module lies on that
/// face; the bolts retract so a peer can still lock onto it) or already in a
/// handshake with exactly this peer. At most one of the two ports may be
/// Disabled, since a disabled face cannot drive the approach. Throws Error for
/// unknown modules or port indices outside the module's spec.
std::optional<DockRejection> can_dock(const World& world, const DockRequest& request);

/// Centers within module_pitch * (1 + misalignment_tolerance).
bool adjacent(const World& world, const ModuleId& a, const ModuleId& b);

/// Forms a Locked connection. The side that can actively lock (a first) pays
/// the locking energy quantum. Throws DockingError on rejection or NotAdjacent.
World dock(const World& world, const DockRequest& request);

/// Inserts a Locked connection without adjacency or energy accounting; used
/// for initial layouts. Compatibility rules still apply.
World attach(const World& world, const DockRequest& request);

/// Removes a connection; ports return to Free, or Disabled when the module
/// still lies on that face. Throws DockingError(NoSuchConnection).
World undock(const World& world, ConnectionId connection);

/// Power needed to keep a Locked connection closed. The worm-gear lock is
/// self-locking, so this is identically zero.
constexpr double holding_power_w(const DockConnection&) noexcept { return 0.0; }

/// Energy of one Aligned->Locked transition, in Wh.
double lock_energy_wh(const SimConfig& config);

/// Checks that every connection's two ports point back at it and that no port
/// carries two connections. Returns a description of the first violation.
std::optional<std::string> port_consistency_error(const World& world);

}  // namespace heterosim
