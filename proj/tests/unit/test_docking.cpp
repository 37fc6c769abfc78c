#include "heterosim/docking.hpp"
#include "heterosim/error.hpp"
#include "heterosim/mechanics.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

using namespace heterosim;
using namespace heterosim::testing;

namespace {

World pair_world(ModuleKind a, ModuleKind b, double gap = 0.105)
{
    World w;
    w.add_module(make_module("A", a, w.config, Pose{0.0, 0.0, Heading(0)}));
    w.add_module(make_module("B", b, w.config, Pose{gap, 0.0, Heading(180)}));
    return w;
}

}  // namespace

TEST(Docking, AdjacentPairLocksAndPaysTheQuantum)
{
    const auto w = pair_world(ModuleKind::Backbone, ModuleKind::Scout);
    const auto next = dock(w, {"A", 1, "B", 3, 0});
    ASSERT_EQ(next.connections.size(), 1u);
    const auto& c = next.connections.begin()->second;
    EXPECT_TRUE(c.locked);
    EXPECT_TRUE(std::holds_alternative<PortLocked>(next.module("A").ports[1]));
    EXPECT_TRUE(std::holds_alternative<PortLocked>(next.module("B").ports[3]));
    const double quantum_wh = 0.5 / 3600.0;
    EXPECT_DOUBLE_EQ(next.energy.lock_wh, quantum_wh);
    EXPECT_NEAR(w.stored_energy_wh() - next.stored_energy_wh(), quantum_wh, 1e-13);  // round-off of the 66 Wh totals
    EXPECT_EQ(holding_power_w(c), 0.0);
    EXPECT_FALSE(port_consistency_error(next));
}

TEST(Docking, ToleranceBand)
{
    const double edge = 0.105 * 1.05;
    EXPECT_NO_THROW(dock(pair_world(ModuleKind::Backbone, ModuleKind::Scout, edge), {"A", 1, "B", 3, 0}));
    try {
        dock(pair_world(ModuleKind::Backbone, ModuleKind::Scout, edge + 1e-6), {"A", 1, "B", 3, 0});
        FAIL() << "expected NotAdjacent";
    } catch (const DockingError& e) {
        EXPECT_EQ(e.reason(), DockRejection::NotAdjacent);
    }
}

TEST(Docking, RejectionReasons)
{
    auto wheels = pair_world(ModuleKind::ActiveWheel, ModuleKind::ActiveWheel);
    EXPECT_EQ(can_dock(wheels, {"A", 0, "B", 1, 0}), DockRejection::ShapeIncompatible);

    auto w = pair_world(ModuleKind::Backbone, ModuleKind::Scout);
    EXPECT_EQ(can_dock(w, {"A", 0, "A", 1, 0}), DockRejection::SelfDock);
    EXPECT_EQ(can_dock(w, {"A", 0, "B", 1, 45}), DockRejection::BadOrientation);
    EXPECT_THROW(can_dock(w, {"A", 7, "B", 1, 0}), Error);
    EXPECT_THROW(can_dock(w, {"A", 0, "Z", 1, 0}), Error);

    w = attach(w, {"A", 1, "B", 3, 0});
    EXPECT_EQ(can_dock(w, {"A", 1, "B", 0, 0}), DockRejection::PortBusy);
    EXPECT_EQ(can_dock(w, {"A", 2, "B", 3, 0}), DockRejection::PortBusy);

    World passive;
    passive.add_module(make_module("P", passive_spec({}), Pose{}));
    passive.add_module(make_module("Q", passive_spec({}), Pose{0.105, 0.0, Heading(0)}));
    EXPECT_EQ(can_dock(passive, {"P", 0, "Q", 0, 0}), DockRejection::NoActiveLocker);
}

TEST(Docking, PassiveSideIsLockedByTheActivePeer)
{
    World w;
    w.add_module(make_module("P", passive_spec({}), Pose{}));
    w.add_module(make_module("S", ModuleKind::Scout, w.config, Pose{0.105, 0.0, Heading(180)}));
    const auto next = dock(w, {"P", 0, "S", 2, 90});
    EXPECT_LT(next.module("S").battery_soc, 1.0);
    EXPECT_EQ(next.module("P").battery_soc, 0.0);
    const auto& c = next.connections.begin()->second;
    // Stored normalized: P sorts first, orientation measured from P.
    EXPECT_EQ(c.module_a, "P");
    EXPECT_EQ(c.orientation_deg, 90);
}

TEST(Docking, NormalizationInvertsOrientation)
{
    auto w = attach(pair_world(ModuleKind::Backbone, ModuleKind::Scout), {"B", 3, "A", 1, 90});
    const auto& c = w.connections.begin()->second;
    EXPECT_EQ(c.module_a, "A");
    EXPECT_EQ(c.orientation_deg, 270);
}

TEST(Docking, UndockFreesPortsOrDisablesTheGroundFace)
{
    auto w = attach(pair_world(ModuleKind::Backbone, ModuleKind::ActiveWheel), {"A", 3, "B", 0, 0});
    w = set_posture(w, "A", Posture::fallen_on(3));
    EXPECT_TRUE(std::holds_alternative<PortLocked>(w.module("A").ports[3])) << "a locked ground face stays locked";
    const auto id = w.connections.begin()->first;
    const auto released = undock(w, id);
    EXPECT_TRUE(released.connections.empty());
    EXPECT_TRUE(std::holds_alternative<PortDisabled>(released.module("A").ports[3]));
    EXPECT_TRUE(std::holds_alternative<PortFree>(released.module("B").ports[0]));
    try {
        undock(released, id);
        FAIL() << "expected NoSuchConnection";
    } catch (const DockingError& e) {
        EXPECT_EQ(e.reason(), DockRejection::NoSuchConnection);
    }
}

TEST(Docking, DisabledFaceAcceptsAPeerButNotTwoDisabledFaces)
{
    auto w = set_posture(pair_world(ModuleKind::Backbone, ModuleKind::Backbone), "A", Posture::fallen_on(3));
    EXPECT_FALSE(can_dock(w, {"B", 1, "A", 3, 0}));
    w = set_posture(w, "B", Posture::fallen_on(1));
    EXPECT_EQ(can_dock(w, {"B", 1, "A", 3, 0}), DockRejection::PortBusy);
}

TEST(Docking, SymmetryProperties)
{
    Rng rng(21);
    for (int i = 0; i < 1000; ++i) {
        const auto world = random_world(rng, rng.integer(2, 8), rng.integer(0, 12));
        const auto r = random_request(rng, world);
        const auto verdict = can_dock(world, r);
        ASSERT_EQ(verdict, can_dock(world, r.reversed())) << r.a << ":" << r.port_a << " " << r.b << ":" << r.port_b;
        if (valid_orientation(r.orientation_deg)) {
            auto turned = r;
            turned.orientation_deg = (r.orientation_deg + 90) % 360;
            ASSERT_EQ(verdict, can_dock(world, turned));
        }
        if (r.a != r.b && world.module(r.a).kind() == ModuleKind::ActiveWheel &&
            world.module(r.b).kind() == ModuleKind::ActiveWheel) {
            ASSERT_TRUE(verdict.has_value());
        }
        ASSERT_FALSE(port_consistency_error(world));
    }
}

TEST(Docking, RandomDockUndockSequencesStayConsistent)
{
    Rng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        auto world = random_world(rng, 6, 0);
        for (int step = 0; step < 40; ++step) {
            if (!world.connections.empty() && rng.coin(0.3)) {
                auto it = world.connections.begin();
                std::advance(it, rng.integer(0, static_cast<int>(world.connections.size()) - 1));
                world = undock(world, it->first);
            } else {
                const auto r = random_request(rng, world);
                if (!can_dock(world, r)) world = attach(world, r);
            }
            ASSERT_FALSE(port_consistency_error(world));
        }
    }
}
