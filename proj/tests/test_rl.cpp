#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "snapfit/rl.hpp"

using namespace snapfit;

namespace {

Scenario tiny_train_scenario() {
    Scenario sc;
    sc.train.steps = 30;
    sc.train.warmup = 8;
    sc.train.eval_period = 0;  // no mid-run evals
    sc.train.batch_size = 16;
    sc.train.buffer_capacity = 1000;
    return sc;
}

// Regularized upper incomplete gamma Q(a, x), series for x < a + 1 and
// continued fraction otherwise. Used for the chi-square tail probability.
double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 1.0;
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-14) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-14) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

Transition make_transition(double tag) {
    Transition t;
    for (int i = 0; i < kObsDim; ++i) t.obs[i] = 0.01 * i + tag;
    for (int i = 0; i < kActDim; ++i) t.act[i] = std::tanh(0.1 * i - tag);
    t.reward = tag;
    t.next_obs = t.obs;
    t.terminal = true;
    return t;
}

}  // namespace

TEST(Replay, UniformSamplingPassesChiSquare) {
    const int bins = 50;
    ReplayBuffer buf(bins);
    for (int i = 0; i < bins; ++i) buf.push(make_transition(i));
    Rng rng(12345);
    const int draws = 100000;
    std::vector<int> counts(bins, 0);
    for (int i = 0; i < draws; ++i) {
        const int k = static_cast<int>(std::lround(buf.sample(rng).reward));
        ASSERT_GE(k, 0);
        ASSERT_LT(k, bins);
        ++counts[k];
    }
    const double expect = static_cast<double>(draws) / bins;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    const double p = gamma_q(0.5 * (bins - 1), 0.5 * chi2);
    EXPECT_GT(p, 0.01) << "chi2 " << chi2;
}

TEST(Replay, OverwritesOldestWhenFull) {
    ReplayBuffer buf(4);
    for (int i = 0; i < 7; ++i) buf.push(make_transition(i));
    EXPECT_EQ(buf.size(), 4u);
    Rng rng(3);
    std::map<int, int> seen;
    for (int i = 0; i < 2000; ++i)
        seen[static_cast<int>(std::lround(buf.sample(rng).reward))]++;
    // 0..2 were displaced; 3..6 survive
    EXPECT_EQ(seen.count(0), 0u);
    EXPECT_EQ(seen.count(2), 0u);
    for (int k = 3; k <= 6; ++k) EXPECT_GT(seen[k], 0) << k;
}

TEST(Gradients, LinearModelIsExact) {
    Rng rng(7);
    Mlp net = make_mlp({4, 3}, rng);
    Vec x(4);
    x << 0.2, -0.5, 1.1, 0.3;
    EXPECT_LT(gradient_check(net, x), 1e-9);
}

TEST(Gradients, PolicyAndCriticShapesPassFiniteDifference) {
    Rng rng(11);
    Mlp policy = make_mlp({kObsDim, 64, 64, 2 * kActDim}, rng);
    Vec obs(kObsDim);
    for (int i = 0; i < kObsDim; ++i) obs[i] = 0.1 * (i - 6);
    EXPECT_LT(gradient_check(policy, obs), 1e-4);

    Mlp critic = make_mlp({kObsDim + kActDim, 64, 64, 1}, rng);
    Vec sa(kObsDim + kActDim);
    for (int i = 0; i < sa.size(); ++i) sa[i] = 0.05 * (i % 9) - 0.2;
    EXPECT_LT(gradient_check(critic, sa), 1e-4);
}

TEST(Gradients, SoftUpdateBlendsExactly) {
    Rng rng(5);
    Mlp a = make_mlp({3, 4, 2}, rng);
    Mlp b = make_mlp({3, 4, 2}, rng);
    Mlp target = b;
    const double tau = 0.25;
    soft_update(target, a, tau);
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const Mat expect = 0.75 * b.layers[i].W + 0.25 * a.layers[i].W;
        EXPECT_TRUE(target.layers[i].W.isApprox(expect, 0.0));
        const Vec eb = 0.75 * b.layers[i].b + 0.25 * a.layers[i].b;
        EXPECT_TRUE(target.layers[i].b.isApprox(eb, 0.0));
    }
}

TEST(Agents, ZeroLearningRateChangesNothing) {
    Scenario sc;
    sc.train.lr = 0.0;
    sc.train.batch_size = 8;
    SacAgent agent(sc.train, 42);
    ReplayBuffer buf(64);
    for (int i = 0; i < 32; ++i) buf.push(make_transition(0.1 * i));
    const Mlp before = agent.actor();
    const Mlp critic_before = agent.critic1();
    Rng rng(9);
    for (int i = 0; i < 5; ++i) agent.update(buf, rng);
    for (std::size_t i = 0; i < before.layers.size(); ++i) {
        EXPECT_TRUE(agent.actor().layers[i].W == before.layers[i].W);
        EXPECT_TRUE(agent.actor().layers[i].b == before.layers[i].b);
    }
    for (std::size_t i = 0; i < critic_before.layers.size(); ++i)
        EXPECT_TRUE(agent.critic1().layers[i].W == critic_before.layers[i].W);
}

TEST(Agents, CriticRegressesSingleTerminalTransition) {
    Scenario sc;
    sc.train.lr = 3e-3;
    sc.train.batch_size = 1;
    SacAgent agent(sc.train, 4);
    ReplayBuffer buf(4);
    Transition t = make_transition(0.0);
    t.reward = -0.5;
    t.terminal = true;
    buf.push(t);
    Rng rng(8);
    const Vec s = Eigen::Map<const Vec>(t.obs.data(), kObsDim);
    const Vec a = Eigen::Map<const Vec>(t.act.data(), kActDim);
    const double before = std::abs(agent.critic_value(s, a) - t.reward);
    double first_loss = 0.0, last_loss = 0.0;
    for (int i = 0; i < 300; ++i) {
        const UpdateInfo info = agent.update(buf, rng);
        if (i == 0) first_loss = info.critic_loss;
        last_loss = info.critic_loss;
    }
    const double after = std::abs(agent.critic_value(s, a) - t.reward);
    EXPECT_LT(last_loss, first_loss);
    EXPECT_LT(after, before);
    EXPECT_LT(after, 0.05);
}

TEST(Agents, ActionsStayNormalized) {
    Scenario sc;
    SacAgent sac(sc.train, 3);
    Td3Agent td3(sc.train, 3);
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        Vec obs(kObsDim);
        for (int i = 0; i < kObsDim; ++i) obs[i] = rng.uniform(-3.0, 3.0);
        for (const Vec& a : {sac.act_explore(obs), sac.act_greedy(obs),
                             td3.act_explore(obs), td3.act_greedy(obs)}) {
            ASSERT_EQ(a.size(), kActDim);
            for (int i = 0; i < kActDim; ++i) {
                EXPECT_GE(a[i], -1.0);
                EXPECT_LE(a[i], 1.0);
            }
        }
    }
}

TEST(Agents, Td3DelaysActorUpdates) {
    Scenario sc;
    sc.train.batch_size = 8;
    Td3Agent agent(sc.train, 21);
    ReplayBuffer buf(64);
    for (int i = 0; i < 32; ++i) buf.push(make_transition(0.05 * i));
    Rng rng(2);
    const Mlp initial = agent.actor();
    UpdateInfo i1 = agent.update(buf, rng);
    EXPECT_FALSE(i1.actor_updated);
    EXPECT_TRUE(agent.actor().layers[0].W == initial.layers[0].W);
    UpdateInfo i2 = agent.update(buf, rng);
    EXPECT_TRUE(i2.actor_updated);
    EXPECT_FALSE(agent.actor().layers[0].W == initial.layers[0].W);
}

TEST(Env, ObservationNormalizationAndUnitQuaternion) {
    Observation o;
    o.p_rel = {0.05, 0.0, -0.025};
    o.quat = {1.0, 0.0, 0.0, 0.0};
    o.wrench = {20.0, -10.0, 40.0, 1.0, -0.5, 2.0};
    const Vec v = normalize_observation(o);
    ASSERT_EQ(v.size(), kObsDim);
    EXPECT_DOUBLE_EQ(v[0], 1.0);
    EXPECT_DOUBLE_EQ(v[2], -0.5);
    EXPECT_DOUBLE_EQ(v[7], 1.0);
    EXPECT_DOUBLE_EQ(v[8], -0.5);
    EXPECT_DOUBLE_EQ(v[9], 2.0);
    EXPECT_DOUBLE_EQ(v[10], 1.0);

    Scenario sc;
    SkillEnv env(sc, 77);
    const Vec obs = env.reset();
    ASSERT_EQ(obs.size(), kObsDim);
    const double qn = std::sqrt(obs[3] * obs[3] + obs[4] * obs[4] +
                                obs[5] * obs[5] + obs[6] * obs[6]);
    EXPECT_NEAR(qn, 1.0, 1e-12);
}

TEST(Env, SteppingFinishedEpisodeIsAnError) {
    Scenario sc;
    sc.randomization.offset_range = 0.0;
    sc.randomization.yaw_range = 0.0;
    sc.randomization.force_noise = 0.0;
    SkillEnv env(sc, 5);
    env.reset();
    const Action a = nominal_action(sc);
    const auto out = env.step(a);
    EXPECT_TRUE(out.done);
    EXPECT_TRUE(out.success);
    EXPECT_FALSE(out.truncated);  // success terminates, it does not truncate
    try {
        env.step(a);
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "episode finished");
    }
}

TEST(Train, SameSeedIsBitReproducible) {
    const Scenario sc = tiny_train_scenario();
    const TrainResult a = train(sc, 99);
    const TrainResult b = train(sc, 99);
    ASSERT_EQ(a.actor.layers.size(), b.actor.layers.size());
    for (std::size_t i = 0; i < a.actor.layers.size(); ++i) {
        EXPECT_TRUE(a.actor.layers[i].W == b.actor.layers[i].W) << "layer " << i;
        EXPECT_TRUE(a.actor.layers[i].b == b.actor.layers[i].b) << "layer " << i;
    }
    EXPECT_EQ(a.episodes, b.episodes);
}

TEST(Train, ZeroStepsYieldsEmptyCurveAndInitialActor) {
    Scenario sc = tiny_train_scenario();
    sc.train.steps = 0;
    const TrainResult r = train(sc, 1);
    EXPECT_TRUE(r.curve.empty());
    EXPECT_FALSE(r.diverged);
    EXPECT_EQ(r.actor.input_dim(), kObsDim);
    EXPECT_EQ(r.actor.output_dim(), 2 * kActDim);
    EXPECT_EQ(r.meta.step_count, 0);
}

TEST(Train, ExplodingLearningRateReportsDivergence) {
    Scenario sc = tiny_train_scenario();
    sc.train.steps = 60;
    sc.train.warmup = 4;
    // Large enough that the first optimizer step alone pushes the critic
    // output past sqrt(DBL_MAX), so the next squared error overflows.
    sc.train.lr = 1e200;
    const TrainResult r = train(sc, 3);
    ASSERT_TRUE(r.diverged);
    EXPECT_NE(r.divergence_note.find("divergence"), std::string::npos);
    // the reported actor is the last healthy snapshot, still finite
    for (const auto& l : r.actor.layers)
        EXPECT_TRUE(l.W.allFinite() && l.b.allFinite());
}

TEST(Train, CurveRowsFollowEvalSchedule) {
    Scenario sc = tiny_train_scenario();
    sc.train.steps = 20;
    sc.train.warmup = 30;  // pure exploration run, no updates
    sc.train.eval_period = 10;
    sc.train.eval_rollouts = 2;
    const TrainResult r = train(sc, 17);
    ASSERT_EQ(r.curve.size(), 2u);
    EXPECT_EQ(r.curve[0].step, 10);
    EXPECT_EQ(r.curve[1].step, 20);
    for (const auto& p : r.curve) {
        EXPECT_LE(p.avg_return, 0.0);
        EXPECT_GE(p.success_rate, 0.0);
        EXPECT_LE(p.success_rate, 1.0);
        EXPECT_GE(p.mean_skills, 1.0);
        EXPECT_LE(p.mean_skills, 6.0);
    }
    const CsvTable t = curve_table(r.curve);
    ASSERT_EQ(t.columns.size(), 4u);
    EXPECT_EQ(t.columns[0], "step");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(t.rows[1][0], 20.0);
}

TEST(Checkpoint, RoundTripPreservesWeightsAndMeta) {
    Rng rng(31);
    Mlp actor = make_mlp({kObsDim, 64, 64, 2 * kActDim}, rng);
    CheckpointMeta meta;
    meta.algorithm = "sac";
    meta.seed = 777;
    meta.step_count = 12345;
    const std::string path = "/tmp/snapfit_test.ckpt";
    save_checkpoint(path, actor, meta);
    CheckpointMeta back;
    const Mlp loaded = load_checkpoint(path, &back);
    ASSERT_EQ(loaded.layers.size(), actor.layers.size());
    for (std::size_t i = 0; i < actor.layers.size(); ++i) {
        EXPECT_TRUE(loaded.layers[i].W == actor.layers[i].W);
        EXPECT_TRUE(loaded.layers[i].b == actor.layers[i].b);
    }
    EXPECT_EQ(back.algorithm, "sac");
    EXPECT_EQ(back.seed, 777u);
    EXPECT_EQ(back.step_count, 12345);
    EXPECT_EQ(back.obs_dim, kObsDim);
    EXPECT_EQ(back.act_dim, kActDim);
}

TEST(Checkpoint, WrongMagicIsAVersionMismatch) {
    const std::string path = "/tmp/snapfit_bad.ckpt";
    write_file(path, "SFS9????????");
    EXPECT_THROW(load_checkpoint(path), CheckpointError);
    try {
        load_checkpoint(path);
    } catch (const CheckpointError& e) {
        EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos);
    }
}

TEST(Grid, ShapesAndBoundsHold) {
    Scenario sc;
    sc.randomization.force_noise = 0.0;
    GridSpec spec;
    spec.yaws = {0.0, deg2rad(8.0)};
    spec.mounts = {0.0};
    spec.rollouts = 2;
    // fixed mid-range action: a competent scripted baseline
    const Action nominal = nominal_action(sc);
    auto policy = [&](const Vec&) {
        Vec a(kActDim);
        const auto flat = nominal.flat();
        for (int i = 0; i < kActDim; ++i) a[i] = flat[static_cast<std::size_t>(i)];
        return a;
    };
    const GridResult g = evaluate_grid(sc, policy, spec, 11);
    ASSERT_EQ(g.success.size(), 2u);
    ASSERT_EQ(g.mean_skills.size(), 2u);
    for (double s : g.success) {
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
    }
    for (double k : g.mean_skills) {
        EXPECT_GE(k, 1.0);
        EXPECT_LE(k, 6.0);
    }
    const CsvTable t = grid_table(g);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.columns[0], "yaw_deg");
    const std::string pgm = grid_pgm(g);
    EXPECT_EQ(pgm.rfind("P2\n2 1\n255\n", 0), 0u);
}

TEST(Grid, StandardSpecIsNineYawsByFiveMounts) {
    const GridSpec g = GridSpec::standard();
    ASSERT_EQ(g.yaws.size(), 9u);
    ASSERT_EQ(g.mounts.size(), 5u);
    EXPECT_NEAR(g.yaws.front(), deg2rad(-8.0), 1e-12);
    EXPECT_NEAR(g.yaws.back(), deg2rad(8.0), 1e-12);
    EXPECT_NEAR(g.mounts.front(), -60e-3, 1e-12);
    EXPECT_NEAR(g.mounts.back(), 60e-3, 1e-12);
}
