#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include <snapfit/skills.hpp>

namespace snapfit {
namespace {

Scenario nominal_scenario() {
    Scenario s;
    s.randomization.offset_range = 0.0;
    s.randomization.yaw_range = 0.0;
    s.randomization.force_noise = 0.0;
    return s;
}

TEST(DecodeAction, MidpointAtZeroVector) {
    const Scenario s;
    Action a;
    a.selector = -1.0;  // all u already zero
    const DecodedAction d = decode_action(a, s.skills);
    EXPECT_FALSE(d.pivot_only);
    EXPECT_DOUBLE_EQ(d.params.lin.dpx, 0.0);
    EXPECT_DOUBLE_EQ(d.params.approach.vz, 11e-3);
    EXPECT_DOUBLE_EQ(d.params.approach.fz, 9.0);
    EXPECT_DOUBLE_EQ(d.params.slide.vxz, 5.5e-3);
    EXPECT_DOUBLE_EQ(d.params.slide.cpd, 5.5e-4);
    EXPECT_DOUBLE_EQ(d.params.pivot.phib, 0.0);
    EXPECT_DOUBLE_EQ(d.params.pivot.omega, 0.26);
    EXPECT_DOUBLE_EQ(d.params.pivot.fx, 16.5);
}

TEST(DecodeAction, RangeEndpoints) {
    const Scenario s;
    Action a;
    a.u[0] = 1.0;   // lin dpx upper end
    a.u[9] = -1.0;  // pivot omega lower end
    a.selector = 0.0;
    const DecodedAction d = decode_action(a, s.skills);
    EXPECT_TRUE(d.pivot_only);  // selector zero counts as pivot choice
    EXPECT_NEAR(d.params.lin.dpx, 25e-3, 1e-15);
    EXPECT_NEAR(d.params.pivot.omega, 0.02, 1e-15);
}

TEST(DecodeAction, RejectsUnnormalizedComponents) {
    const Scenario s;
    Action a;
    a.u[3] = 1.0000001;
    EXPECT_THROW(
        {
            try {
                decode_action(a, s.skills);
            } catch (const std::invalid_argument& e) {
                EXPECT_STREQ(e.what(), "unnormalized action");
                throw;
            }
        },
        std::invalid_argument);
    a.u[3] = std::nan("");
    EXPECT_THROW(decode_action(a, s.skills), std::invalid_argument);
    a.u[3] = 0.0;
    a.selector = -1.5;
    EXPECT_THROW(decode_action(a, s.skills), std::invalid_argument);
}

TEST(DecodeAction, RoundTripIsAffineExact) {
    const Scenario s;
    for (int i = -4; i <= 4; ++i) {
        Action a;
        a.selector = i >= 0 ? 0.3 : -0.3;
        for (std::size_t j = 0; j < Action::kParamCount; ++j) {
            a.u[j] = 0.2 * i + 0.004 * static_cast<double>(j) * i;
        }
        const DecodedAction d = decode_action(a, s.skills);
        const Action b = encode_action(d, s.skills);
        for (std::size_t j = 0; j < Action::kParamCount; ++j) {
            EXPECT_NEAR(b.u[j], a.u[j], 1e-12) << "component " << j;
        }
        EXPECT_EQ(b.selector >= 0.0, a.selector >= 0.0);
    }
}

TEST(ActionFlat, FlatRoundTrip) {
    Action a;
    a.selector = 0.5;
    for (std::size_t j = 0; j < Action::kParamCount; ++j) {
        a.u[j] = -1.0 + 0.15 * static_cast<double>(j);
    }
    const Action b = Action::from_flat(a.flat());
    EXPECT_EQ(b.selector, a.selector);
    EXPECT_TRUE(b.u == a.u);
}

TEST(SkillSpecs, SevenPartsWellFormed) {
    for (SkillKind k :
         {SkillKind::linear_move, SkillKind::approach, SkillKind::slide,
          SkillKind::pitch_pivot, SkillKind::yaw_pivot}) {
        const SkillSpec spec = skill_spec(k);
        EXPECT_FALSE(spec.name.empty());
        EXPECT_FALSE(spec.monitors.empty());
        EXPECT_TRUE(spec.sub_skills.empty());
        EXPECT_NO_THROW(validate(spec));
    }
    const SkillSpec terminal = macro_spec(false);
    EXPECT_EQ(terminal.sub_skills.size(), 5u);
    EXPECT_EQ(terminal.sub_skills.front(), SkillKind::linear_move);
    EXPECT_EQ(terminal.sub_skills.back(), SkillKind::yaw_pivot);
    EXPECT_NO_THROW(validate(terminal));
    const SkillSpec pivot = macro_spec(true);
    EXPECT_EQ(pivot.sub_skills.size(), 2u);
    EXPECT_NO_THROW(validate(pivot));
}

TEST(ExecSkill, ApproachStopsOnContact) {
    const Scenario s = nominal_scenario();
    World w(s, 3);
    const ParamSet p = decode_action(nominal_action(s), s.skills).params;
    const SkillLog log =
        exec_skill(w, SkillKind::approach, p, s.skills.timeout);
    EXPECT_EQ(log.stop, StopReason::contact_detected);
    EXPECT_TRUE(w.state().flags.base_contact);
    EXPECT_FALSE(log.tunneling);
    // Settled onto the press force.
    EXPECT_NEAR(w.contact_wrench().force[2], -p.approach.fz, 0.5);
}

TEST(ExecSkill, SlideStopsOnFixedHookContact) {
    const Scenario s = nominal_scenario();
    World w(s, 3);
    const ParamSet p = decode_action(nominal_action(s), s.skills).params;
    exec_skill(w, SkillKind::approach, p, s.skills.timeout);
    const SkillLog log = exec_skill(w, SkillKind::slide, p, s.skills.timeout);
    EXPECT_EQ(log.stop, StopReason::contact_detected);
    EXPECT_TRUE(w.state().flags.fixed_hook_engaged);
}

TEST(ExecSkill, PitchPivotLatchesFromEngagedState) {
    const Scenario s = nominal_scenario();
    World w(s, 3);
    const ParamSet p = decode_action(nominal_action(s), s.skills).params;
    exec_skill(w, SkillKind::approach, p, s.skills.timeout);
    exec_skill(w, SkillKind::slide, p, s.skills.timeout);
    const SkillLog log =
        exec_skill(w, SkillKind::pitch_pivot, p, s.skills.timeout);
    EXPECT_EQ(log.stop, StopReason::goal_monitor);
    EXPECT_TRUE(w.state().flags.snap_latched);
    EXPECT_NEAR(w.state().pose.pitch, 0.0, s.control.goal_tol_ang);
}

TEST(ExecSkill, TimeoutBoundsSimulatedDuration) {
    Scenario s = nominal_scenario();
    s.control.pre_z = 60e-3;  // too far to reach at the slowest speed
    World w(s, 3);
    ParamSet p = decode_action(nominal_action(s), s.skills).params;
    p.approach.vz = 2e-3;
    const SkillLog log =
        exec_skill(w, SkillKind::approach, p, s.skills.timeout);
    EXPECT_EQ(log.stop, StopReason::timeout);
    EXPECT_LE(log.duration, s.skills.timeout + s.control.dt + 1e-9);
    EXPECT_FALSE(w.state().flags.base_contact);
}

TEST(ExecSkill, RecklessPivotHitsForceLimit) {
    const Scenario s = nominal_scenario();
    World w(s, 3);
    ParamSet p = decode_action(nominal_action(s), s.skills).params;
    exec_skill(w, SkillKind::approach, p, s.skills.timeout);
    exec_skill(w, SkillKind::slide, p, s.skills.timeout);
    p.pivot.omega = 0.5;
    p.pivot.fz = 30.0;
    const SkillLog log =
        exec_skill(w, SkillKind::pitch_pivot, p, s.skills.timeout);
    EXPECT_EQ(log.stop, StopReason::force_limit);
    EXPECT_TRUE(w.state().force_limit_hit);
}

TEST(RunSequence, NominalActionSucceedsWithOneMacro) {
    const Scenario s = nominal_scenario();
    World w(s, 11);
    const Action a = nominal_action(s);
    const EpisodeResult res = run_sequence(
        w, [&](const Observation&) { return a; }, true);
    EXPECT_TRUE(res.success);
    EXPECT_FALSE(res.force_limit);
    EXPECT_EQ(res.macros_used, 1);
    EXPECT_EQ(res.skills_used, 5);
    ASSERT_EQ(res.logs.size(), 5u);
    EXPECT_EQ(res.logs[0].kind, SkillKind::linear_move);
    EXPECT_EQ(res.logs[1].kind, SkillKind::approach);
    EXPECT_EQ(res.logs[2].kind, SkillKind::slide);
    EXPECT_EQ(res.logs[3].kind, SkillKind::pitch_pivot);
    EXPECT_EQ(res.logs[4].kind, SkillKind::yaw_pivot);
    for (const SkillLog& log : res.logs) {
        EXPECT_FALSE(log.tunneling);
        EXPECT_FALSE(log.rows.empty());
    }
    ASSERT_EQ(res.macro_rewards.size(), 1u);
    EXPECT_GT(res.macro_rewards[0], -0.1);  // near goal, no penalty
    EXPECT_DOUBLE_EQ(res.macro_rewards[0], w.reward());
}

TEST(RunSequence, BudgetExhaustionEndsEpisode) {
    const Scenario s = nominal_scenario();
    World w(s, 11);
    // A pivot-only macro whose targets equal the current pose: every skill
    // reaches its goal monitor immediately and nothing ever latches.
    DecodedAction d;
    d.pivot_only = true;
    d.params.approach.vz = s.skills.approach_vz.mid();
    d.params.approach.fz = s.skills.approach_fz.mid();
    d.params.slide.vxz = s.skills.slide_vxz.mid();
    d.params.slide.fslide = s.skills.slide_fslide.mid();
    d.params.slide.ftarget = s.skills.slide_ftarget.mid();
    d.params.slide.cpd = s.skills.slide_cpd.mid();
    d.params.pivot.phib = s.control.pre_pitch;
    d.params.pivot.omega = 0.02;
    d.params.pivot.phic = 0.0;
    d.params.pivot.fx = 3.0;
    d.params.pivot.fz = 3.0;
    const Action a = encode_action(d, s.skills);
    const EpisodeResult res =
        run_sequence(w, [&](const Observation&) { return a; });
    EXPECT_FALSE(res.success);
    EXPECT_EQ(res.macros_used, s.train.skill_budget);
    EXPECT_EQ(res.skills_used, 2 * s.train.skill_budget);
    EXPECT_EQ(w.state().skill_budget_remaining, 0);
    for (double r : res.macro_rewards) EXPECT_LT(r, 0.0);
}

TEST(RunSequence, TeleportingMacroIsPenalized) {
    const Scenario s = nominal_scenario();
    World w(s, 11);
    // Park the terminal flat just outside engagement, overlap-free.
    w.displace(-9.6e-3 - s.control.pre_x, 4e-3 - s.control.pre_z,
               -s.control.pre_pitch);
    ASSERT_EQ(w.deflection().deflection, 0.0);
    ASSERT_FALSE(w.state().tunneling);

    // The linear skill then teleports straight into a mid-flank overlap.
    DecodedAction d;
    d.pivot_only = false;
    d.params.lin.dpx = 10e-3;
    d.params.approach.vz = 10e-3;
    d.params.approach.fz = 8.0;
    d.params.slide.vxz = 5e-3;
    d.params.slide.fslide = 30.0;
    d.params.slide.ftarget = 5.0;
    d.params.slide.cpd = 5e-4;
    d.params.pivot.omega = 0.15;
    d.params.pivot.fx = 10.0;
    d.params.pivot.fz = 6.0;
    const Action a = encode_action(d, s.skills);
    const EpisodeResult res =
        run_sequence(w, [&](const Observation&) { return a; });
    ASSERT_GE(res.logs.size(), 1u);
    EXPECT_TRUE(res.logs[0].tunneling);
    EXPECT_TRUE(w.state().tunneling);
    ASSERT_GE(res.macro_rewards.size(), 1u);
    EXPECT_LT(res.macro_rewards[0], -2.0);
}

}  // namespace
}  // namespace snapfit
