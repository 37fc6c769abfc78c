#include "heterosim/config.hpp"
#include "heterosim/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace heterosim;

TEST(Config, DefaultsMatchDocumentedConstants)
{
    const SimConfig c;
    EXPECT_EQ(c.dt, 0.1);
    EXPECT_EQ(c.module_pitch, 0.105);
    EXPECT_EQ(c.misalignment_tolerance, 0.05);
    EXPECT_EQ(c.lock_energy_j, 0.5);
    EXPECT_EQ(c.lock_duration_s, 2.0);
    EXPECT_EQ(c.battery_energy_wh, 33.0);
    EXPECT_EQ(c.limiter_current_a, 8.0);
    EXPECT_EQ(c.internal_resistance_ohm, 0.1);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, OverridesParseEveryKind)
{
    SimConfig c;
    apply_override(c, "dt", "0.05");
    apply_override(c, "max_ticks", "123");
    apply_override(c, "seed", "99");
    apply_override(c, "trace_phases", "true");
    EXPECT_EQ(c.dt, 0.05);
    EXPECT_EQ(c.max_ticks, 123);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_TRUE(c.trace_phases);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    SimConfig c;
    EXPECT_THROW(apply_override(c, "warp_factor", "9"), ValidationError);
    EXPECT_THROW(apply_override(c, "dt", "fast"), ValidationError);
    EXPECT_THROW(apply_override(c, "max_ticks", "1.5"), ValidationError);
    EXPECT_THROW(apply_override(c, "dt", "-0.1"), ValidationError);
    EXPECT_THROW(apply_override(c, "wireless_drop_probability", "1.5"), ValidationError);
    EXPECT_EQ(c.dt, SimConfig{}.dt) << "a rejected override must leave the config untouched";
}

TEST(Config, EveryListedKeyRoundTrips)
{
    const auto& keys = config_keys();
    EXPECT_EQ(keys.size(), 18u);
    EXPECT_NE(std::find(keys.begin(), keys.end(), "idle_draw_w"), keys.end());
    for (const auto& key : keys) {
        SimConfig c;
        const std::string value = key == "trace_phases" ? "false" : "1";
        EXPECT_NO_THROW(apply_override(c, key, value)) << key;
    }
}
