// Command-line front end: force sweeps, model comparisons, scripted
// assembly runs, policy training, and robustness grids. Every command that
// writes results also writes a manifest naming its inputs, seed, and output
// files, because a CSV whose provenance is unknown is a liability, not data.
//
// Exit codes: 0 success, 2 scenario problems (with the offending key path),
// 3 checkpoint format mismatches, 1 anything else. CLI11 usage errors keep
// their own 100+ range.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snapfit/io.hpp"
#include "snapfit/rl.hpp"
#include "snapfit/skills.hpp"

namespace fs = std::filesystem;
using namespace snapfit;

namespace {

int log_level() {
    const char* env = std::getenv("SNAPFIT_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "[snapfit] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::fprintf(stderr, "[snapfit:debug] %s\n", msg.c_str());
}

struct GlobalOpts {
    std::string scenario_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int workers = 1;
    bool deterministic = false;
};

Scenario load_scenario_or_default(const GlobalOpts& g) {
    if (g.scenario_path.empty()) return Scenario{};
    return load_scenario(g.scenario_path);
}

RunManifest begin_manifest(const std::string& command, const GlobalOpts& g,
                           const Scenario& sc) {
    RunManifest m;
    m.command = command;
    m.scenario_path = g.scenario_path.empty() ? "<built-in defaults>" : g.scenario_path;
    m.scenario_hash = sc.source_hash;
    m.seed = g.seed;
    m.workers = g.deterministic ? 1 : g.workers;
    m.deterministic = g.deterministic;
    m.started_at = utc_timestamp();
    return m;
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

void finish_manifest(RunManifest& m, const GlobalOpts& g) {
    m.finished_at = utc_timestamp();
    const std::string path = out_path(g, m.command + "_manifest.json");
    write_manifest(path, m);
    log_info("manifest: " + path);
}

// Scripted one-macro assembly with tracing; shared by forces/model-compare/
// simulate. The world starts on the nominal rail so runs are comparable.
EpisodeResult run_scripted(const Scenario& sc, std::uint64_t seed) {
    World w(sc, seed);
    const Action nominal = nominal_action(sc);
    return run_sequence(w, [&](const Observation&) { return nominal; }, true);
}

std::vector<const SkillLogRow*> flatten_rows(const EpisodeResult& ep) {
    std::vector<const SkillLogRow*> rows;
    for (const auto& log : ep.logs)
        for (const auto& r : log.rows) rows.push_back(&r);
    return rows;
}

// Step index of the snap-in event: the deepest deflection reached. After it
// the head slides down the far flank and the overlap decays.
std::ptrdiff_t snap_in_step(const std::vector<const SkillLogRow*>& rows) {
    std::ptrdiff_t best = -1;
    double peak = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]->overlap > peak) {
            peak = rows[i]->overlap;
            best = static_cast<std::ptrdiff_t>(i);
        }
    }
    return best;
}

int cmd_forces(const GlobalOpts& g) {
    const Scenario sc = load_scenario_or_default(g);
    RunManifest m = begin_manifest("forces", g, sc);
    const EpisodeResult ep = run_scripted(sc, g.seed);
    const auto rows = flatten_rows(ep);

    CsvTable t;
    t.columns = {"step",       "time_s",     "x_mm",      "z_mm",
                 "pitch_deg",  "overlap_mm", "lateral_N", "joining_N",
                 "sensed_fx_N", "sensed_fz_N"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SkillLogRow& r = *rows[i];
        t.rows.push_back({static_cast<double>(i), r.t, r.pose.x * 1e3, r.pose.z * 1e3,
                          rad2deg(r.pose.pitch), r.overlap * 1e3, r.joining.lateral,
                          r.joining.joining, r.obs.wrench[0], r.obs.wrench[2]});
    }
    const std::string csv = out_path(g, "forces.csv");
    write_csv(csv, t);
    m.outputs.push_back(csv);

    double peak_q = 0.0, peak_j = 0.0;
    for (const auto* r : rows) {
        peak_q = std::max(peak_q, r->joining.lateral);
        peak_j = std::max(peak_j, r->joining.joining);
    }
    std::printf("forces: %zu control steps, success=%s\n", rows.size(),
                ep.success ? "yes" : "no");
    std::printf("peak lateral force %.3f N, peak joining force %.3f N, snap-in step %td\n",
                peak_q, peak_j, snap_in_step(rows));
    finish_manifest(m, g);
    return ep.success ? 0 : 1;
}

int cmd_model_compare(const GlobalOpts& g, const std::vector<std::string>& variants) {
    if (variants.size() < 2)
        throw CLI::ValidationError("model-compare",
                                   "needs at least two joining model variants");
    const Scenario base = load_scenario_or_default(g);
    RunManifest m = begin_manifest("model-compare", g, base);

    struct VariantRun {
        std::string name;
        std::vector<const SkillLogRow*> rows;
        EpisodeResult ep;
        std::ptrdiff_t snap = -1;
    };
    std::vector<VariantRun> runs;
    for (const auto& name : variants) {
        Scenario sc = base;
        if (name == "analytic") {
            sc.control.joining_model = JoiningModel::analytic;
        } else if (name == "slide") {
            sc.control.joining_model = JoiningModel::slide;
        } else if (name == "one_hinge") {
            sc.control.joining_model = JoiningModel::one_hinge;
        } else if (name == "two_hinge") {
            sc.control.joining_model = JoiningModel::two_hinge;
        } else {
            throw CLI::ValidationError("model-compare",
                                       "unknown variant '" + name + "'");
        }
        VariantRun run;
        run.name = name;
        run.ep = run_scripted(sc, g.seed);
        runs.push_back(std::move(run));
        runs.back().rows = flatten_rows(runs.back().ep);
        runs.back().snap = snap_in_step(runs.back().rows);
        log_debug(name + ": " + std::to_string(runs.back().rows.size()) + " steps");
    }

    std::size_t n = runs.front().rows.size();
    for (const auto& r : runs) n = std::min(n, r.rows.size());

    CsvTable t;
    t.columns = {"step", "time_s"};
    for (const auto& r : runs) {
        t.columns.push_back(r.name + "_overlap_mm");
        t.columns.push_back(r.name + "_joining_N");
        t.columns.push_back(r.name + "_snap");
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row{static_cast<double>(i), runs.front().rows[i]->t};
        for (const auto& r : runs) {
            row.push_back(r.rows[i]->overlap * 1e3);
            row.push_back(r.rows[i]->joining.joining);
            row.push_back(static_cast<std::ptrdiff_t>(i) == r.snap ? 1.0 : 0.0);
        }
        t.rows.push_back(std::move(row));
    }
    const std::string csv = out_path(g, "model_compare.csv");
    write_csv(csv, t);
    m.outputs.push_back(csv);

    std::ptrdiff_t lo = runs.front().snap, hi = runs.front().snap;
    for (const auto& r : runs) {
        std::printf("%s: snap-in step %td, success=%s\n", r.name.c_str(), r.snap,
                    r.ep.success ? "yes" : "no");
        lo = std::min(lo, r.snap);
        hi = std::max(hi, r.snap);
    }
    std::printf("snap-in spread: %td control steps\n", hi - lo);
    finish_manifest(m, g);
    return 0;
}

int cmd_simulate(const GlobalOpts& g) {
    const Scenario sc = load_scenario_or_default(g);
    RunManifest m = begin_manifest("simulate", g, sc);
    const EpisodeResult ep = run_scripted(sc, g.seed);

    for (std::size_t i = 0; i < ep.logs.size(); ++i) {
        const SkillLog& log = ep.logs[i];
        std::printf("skill %zu: %-12s stop=%-16s %6.2f s  %5d steps\n", i + 1,
                    skill_name(log.kind), stop_reason_name(log.stop), log.duration,
                    log.steps);
    }
    std::printf("macros=%d skills=%d return=%.4f success=%s\n", ep.macros_used,
                ep.skills_used, ep.total_return, ep.success ? "yes" : "no");

    CsvTable t;
    t.columns = {"step",      "skill",      "time_s",     "x_mm",       "z_mm",
                 "pitch_deg", "overlap_mm", "sensed_fx_N", "sensed_fz_N", "sensed_my_Nm"};
    std::size_t idx = 0;
    for (std::size_t s = 0; s < ep.logs.size(); ++s) {
        for (const auto& r : ep.logs[s].rows) {
            t.rows.push_back({static_cast<double>(idx++), static_cast<double>(s + 1),
                              r.t, r.pose.x * 1e3, r.pose.z * 1e3,
                              rad2deg(r.pose.pitch), r.overlap * 1e3, r.obs.wrench[0],
                              r.obs.wrench[2], r.obs.wrench[4]});
        }
    }
    const std::string csv = out_path(g, "simulate_trace.csv");
    write_csv(csv, t);
    m.outputs.push_back(csv);
    finish_manifest(m, g);
    return ep.success ? 0 : 1;
}

int cmd_train(const GlobalOpts& g, long long steps_override, int seeds_override,
              const std::string& algo_override) {
    Scenario sc = load_scenario_or_default(g);
    if (steps_override >= 0) sc.train.steps = steps_override;
    if (seeds_override > 0) sc.train.seeds = seeds_override;
    if (!algo_override.empty())
        sc.train.algorithm = algo_override == "td3" ? Algorithm::td3 : Algorithm::sac;
    RunManifest m = begin_manifest("train", g, sc);

    bool any_diverged = false;
    for (int k = 0; k < sc.train.seeds; ++k) {
        const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(k);
        log_info("training seed " + std::to_string(seed) + " for " +
                 std::to_string(sc.train.steps) + " steps");
        TrainResult res = train(sc, seed);

        const std::string suffix = "_seed" + std::to_string(seed);
        const std::string curve_path = out_path(g, "curves" + suffix + ".csv");
        write_csv(curve_path, curve_table(res.curve));
        m.outputs.push_back(curve_path);

        const std::string ckpt_path = out_path(g, "policy" + suffix + ".ckpt");
        save_checkpoint(ckpt_path, res.actor, res.meta);
        m.outputs.push_back(ckpt_path);
        m.outputs.push_back(ckpt_path + ".json");

        if (res.diverged) {
            any_diverged = true;
            std::fprintf(stderr, "seed %llu: %s (kept last healthy checkpoint)\n",
                         static_cast<unsigned long long>(seed),
                         res.divergence_note.c_str());
        } else if (!res.curve.empty()) {
            const EvalPoint& last = res.curve.back();
            std::printf("seed %llu: return %.4f, success %.2f, mean skills %.2f\n",
                        static_cast<unsigned long long>(seed), last.avg_return,
                        last.success_rate, last.mean_skills);
        } else {
            std::printf("seed %llu: %lld steps, no evaluation points\n",
                        static_cast<unsigned long long>(seed), sc.train.steps);
        }
    }
    finish_manifest(m, g);
    return any_diverged ? 1 : 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& policy_path, int rollouts) {
    const Scenario sc = load_scenario_or_default(g);
    RunManifest m = begin_manifest("evaluate", g, sc);

    CheckpointMeta meta;
    const Mlp actor = load_checkpoint(policy_path, &meta);
    if (actor.input_dim() != kObsDim)
        throw CheckpointError("checkpoint observation size " +
                              std::to_string(actor.input_dim()) + ", expected " +
                              std::to_string(kObsDim));
    log_info("policy: " + policy_path + " (" + meta.algorithm + ", " +
             std::to_string(meta.step_count) + " steps)");

    GridSpec spec = GridSpec::standard();
    spec.rollouts = rollouts > 0 ? rollouts : sc.train.eval_rollouts;
    const auto policy = greedy_policy(actor);
    const GridResult grid = evaluate_grid(sc, policy, spec, g.seed);

    const std::string csv = out_path(g, "grid.csv");
    write_csv(csv, grid_table(grid));
    m.outputs.push_back(csv);
    const std::string pgm = out_path(g, "grid.pgm");
    write_file(pgm, grid_pgm(grid));
    m.outputs.push_back(pgm);

    double core = 0.0, edge = 0.0;
    int core_n = 0, edge_n = 0;
    for (std::size_t mi = 0; mi < spec.mounts.size(); ++mi) {
        for (std::size_t yi = 0; yi < spec.yaws.size(); ++yi) {
            const double ydeg = std::abs(rad2deg(spec.yaws[yi]));
            if (ydeg <= 2.0 + 1e-9) {
                core += grid.cell_success(mi, yi);
                ++core_n;
            }
            if (ydeg >= 8.0 - 1e-9) {
                edge += grid.cell_success(mi, yi);
                ++edge_n;
            }
        }
    }
    std::printf("grid: %zu yaws x %zu mounts, %d rollouts per cell\n",
                spec.yaws.size(), spec.mounts.size(), spec.rollouts);
    std::printf("core success (|yaw| <= 2 deg): %.3f\n", core / std::max(core_n, 1));
    std::printf("extreme success (|yaw| = 8 deg): %.3f\n", edge / std::max(edge_n, 1));
    finish_manifest(m, g);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"planar snap-fit assembly: joining force models, skills, training"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--scenario", g.scenario_path, "scenario INI file");
    app.add_option("--seed", g.seed, "base random seed");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--workers", g.workers, "rollout workers (results are seed-stable)");
    app.add_flag("--deterministic", g.deterministic,
                 "force single-threaded bit-reproducible execution");

    app.add_subcommand("forces", "scripted nominal assembly force sweep");

    auto* compare = app.add_subcommand("model-compare",
                                       "run several joining models on one assembly");
    std::vector<std::string> variants;
    compare->add_option("--variants", variants,
                        "joining models: analytic, slide, one_hinge, two_hinge")
        ->delimiter(',');

    app.add_subcommand("simulate", "scripted nominal assembly episode");

    auto* train_cmd = app.add_subcommand("train", "train an assembly policy");
    long long steps_override = -1;
    int seeds_override = -1;
    std::string algo_override;
    train_cmd->add_option("--steps", steps_override, "override train.steps");
    train_cmd->add_option("--seeds", seeds_override, "override train.seeds");
    train_cmd->add_option("--algo", algo_override, "override algorithm: sac or td3")
        ->check(CLI::IsMember({"sac", "td3"}));

    auto* eval_cmd = app.add_subcommand("evaluate", "robustness grid for a policy");
    std::string policy_path;
    int rollouts = -1;
    eval_cmd->add_option("--policy", policy_path, "checkpoint file")->required();
    eval_cmd->add_option("--rollouts", rollouts, "rollouts per grid cell");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("forces")) return cmd_forces(g);
        if (app.got_subcommand("model-compare")) {
            try {
                return cmd_model_compare(g, variants);
            } catch (const CLI::ValidationError& e) {
                std::fprintf(stderr, "%s\n", e.what());
                return e.get_exit_code();
            }
        }
        if (app.got_subcommand("simulate")) return cmd_simulate(g);
        if (app.got_subcommand("train"))
            return cmd_train(g, steps_override, seeds_override, algo_override);
        if (app.got_subcommand("evaluate")) return cmd_evaluate(g, policy_path, rollouts);
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "scenario error at '%s': %s\n", e.key_path().c_str(),
                     e.what());
        return 2;
    } catch (const CheckpointError& e) {
        std::fprintf(stderr, "checkpoint error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
