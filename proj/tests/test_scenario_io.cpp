#include <gtest/gtest.h>

#include <snapfit/scenario.hpp>

using namespace snapfit;

TEST(ScenarioDefaults, PassValidation) {
    Scenario s;
    EXPECT_NO_THROW(validate_scenario(s));
    EXPECT_DOUBLE_EQ(s.hook.beam_length, 9e-3);
    EXPECT_DOUBLE_EQ(s.beam.secant_modulus, 1.2e9);
    EXPECT_DOUBLE_EQ(s.control.dt, 0.01);
    EXPECT_EQ(s.train.skill_budget, 6);
}

TEST(ScenarioText, SerializationIsAFixedPoint) {
    Scenario s;
    s.hook.beam_length = 7.3e-3;
    s.hook.joining_angle = deg2rad(27.5);
    s.control.pre_pitch = deg2rad(-2.25);
    s.train.lr = 1.7e-4;
    s.skills.slide_cpd = {2e-4, 9e-4};

    const std::string t1 = scenario_to_text(scenario_from_text(scenario_to_text(s)));
    const Scenario s2 = scenario_from_text(t1);
    EXPECT_EQ(t1, scenario_to_text(s2));

    EXPECT_NEAR(s2.hook.beam_length, 7.3e-3, 7.3e-3 * 1e-14);
    EXPECT_NEAR(s2.hook.joining_angle, deg2rad(27.5), 1e-14);
    EXPECT_NEAR(s2.control.pre_pitch, deg2rad(-2.25), 1e-14);
    EXPECT_NEAR(s2.train.lr, 1.7e-4, 1e-18);
    EXPECT_NEAR(s2.skills.slide_cpd.lo, 2e-4, 1e-18);
}

TEST(ScenarioText, CoversEverySection) {
    const std::string t = scenario_to_text(Scenario{});
    for (const char* sec : {"[meta]", "[hook]", "[rail]", "[beam]", "[lumped]",
                            "[control]", "[randomization]", "[success]",
                            "[skills]", "[train]"})
        EXPECT_NE(t.find(sec), std::string::npos) << sec;
}

TEST(ScenarioLoad, BoundaryUnitsAreBenchUnits) {
    const Scenario s = scenario_from_text(
        "[hook]\n"
        "l = 10\n"
        "alpha_deg = 30\n"
        "[beam]\n"
        "E_S_GPa = 2.4\n"
        "[lumped]\n"
        "dt_us = 50\n"
        "[control]\n"
        "dt_ms = 20\n"
        "pre_pitch_deg = -3\n");
    EXPECT_DOUBLE_EQ(s.hook.beam_length, 10e-3);
    EXPECT_DOUBLE_EQ(s.hook.joining_angle, deg2rad(30.0));
    EXPECT_DOUBLE_EQ(s.beam.secant_modulus, 2.4e9);
    EXPECT_DOUBLE_EQ(s.lumped.dt, 50e-6);
    EXPECT_DOUBLE_EQ(s.control.dt, 0.02);
    EXPECT_DOUBLE_EQ(s.control.pre_pitch, deg2rad(-3.0));
    // untouched keys keep defaults
    EXPECT_DOUBLE_EQ(s.rail.width, 35e-3);
}

TEST(ScenarioLoad, CommentsAndWhitespaceTolerated) {
    const Scenario s = scenario_from_text(
        "# leading comment\n"
        "\n"
        "[hook]  \n"
        "   l =   11   ; trailing comment\n");
    EXPECT_DOUBLE_EQ(s.hook.beam_length, 11e-3);
}

TEST(ScenarioLoad, UnknownKeyNamesFullPath) {
    try {
        scenario_from_text("[hook]\nfoo = 1\n");
        FAIL() << "expected rejection";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.key_path(), "hook.foo");
        EXPECT_NE(std::string(e.what()).find("hook.foo"), std::string::npos);
    }
    EXPECT_THROW(scenario_from_text("[bogus]\nx = 1\n"), ScenarioError);
    EXPECT_THROW(scenario_from_text("stray = 1\n"), ScenarioError);
}

TEST(ScenarioLoad, MalformedLinesAreRejected) {
    EXPECT_THROW(scenario_from_text("[hook\nl = 9\n"), ScenarioError);
    EXPECT_THROW(scenario_from_text("[hook]\nl 9\n"), ScenarioError);
    EXPECT_THROW(scenario_from_text("[hook]\n= 9\n"), ScenarioError);
}

TEST(ScenarioLoad, BadValuesNameTheKey) {
    try {
        scenario_from_text("[hook]\nl = fast\n");
        FAIL() << "expected rejection";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.key_path(), "hook.l");
    }
    EXPECT_THROW(scenario_from_text("[hook]\ncontour = IV\n"), ScenarioError);
    EXPECT_THROW(scenario_from_text("[beam]\ncorrected = maybe\n"), ScenarioError);
    EXPECT_THROW(scenario_from_text("[train]\nsteps = 1e4\n"), ScenarioError);
}

TEST(ScenarioLoad, SemanticChecksNameTheKey) {
    try {
        scenario_from_text("[rail]\nlip_depth = 9\n");
        FAIL() << "expected rejection";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.key_path(), "rail.lip_depth");
    }
    try {
        scenario_from_text("[train]\nbatch = 512\nbuffer = 256\n");
        FAIL() << "expected rejection";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.key_path(), "train.batch");
    }
    try {
        scenario_from_text("[skills]\nslide_cpd_min = 0.5\nslide_cpd_max = 0.5\n");
        FAIL() << "expected rejection";
    } catch (const ScenarioError& e) {
        EXPECT_EQ(e.key_path(), "skills.slide_cpd_min");
    }
    EXPECT_THROW(scenario_from_text("[meta]\nschema_version = 2\n"), ScenarioError);
}

TEST(ScenarioHash, MatchesReferenceVectors) {
    EXPECT_EQ(fnv1a64(""), 14695981039346656037ull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(ScenarioHash, TracksLoadedBytes) {
    const std::string text = "[hook]\nl = 9\n";
    EXPECT_EQ(scenario_from_text(text).source_hash, fnv1a64(text));
    EXPECT_NE(scenario_from_text(text).source_hash,
              scenario_from_text("[hook]\nl = 8\n").source_hash);
}

TEST(ScenarioFiles, SaveLoadRoundTrip) {
    Scenario s;
    s.hook.contour = ContourClass::III;
    s.train.algorithm = Algorithm::td3;
    const std::string path = ::testing::TempDir() + "scenario_roundtrip.ini";
    save_scenario(s, path);
    const Scenario r = load_scenario(path);
    EXPECT_EQ(r.hook.contour, ContourClass::III);
    EXPECT_EQ(r.train.algorithm, Algorithm::td3);
    EXPECT_THROW(load_scenario(path + ".does-not-exist"), ScenarioError);
}

TEST(EffectiveHook, RecessReducesApproachAngleOnLeftOnly) {
    SnapHookProfile h;
    h.recess_side = RecessSide::left;
    EXPECT_DOUBLE_EQ(effective_hook(h).joining_angle,
                     h.joining_angle - h.recess_angle_delta);
    h.recess_side = RecessSide::right;
    EXPECT_DOUBLE_EQ(effective_hook(h).joining_angle, h.joining_angle);
    h.recess_side = RecessSide::none;
    EXPECT_DOUBLE_EQ(effective_hook(h).joining_angle, h.joining_angle);
}
