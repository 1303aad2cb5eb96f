#pragma once
// Parameterizable assembly skills over the planar world, and the bounded
// sequencer that turns policy actions into skill executions.
//
// A skill is described by seven parts: a name, the kinematic frames it binds,
// the task list of controlled axes, its scripts, the monitors that stop it,
// the transitions it offers, and its sub-skills. Two composites exist: the
// terminal macro (linear pre-positioning, approach, slide, pitch pivot, yaw
// pivot) and the standalone pivot pair (pitch pivot, yaw pivot).

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <snapfit/world.hpp>

namespace snapfit {

enum class SkillKind {
    linear_move,
    approach,
    slide,
    pitch_pivot,
    yaw_pivot,
};

inline const char* skill_name(SkillKind k) {
    switch (k) {
        case SkillKind::linear_move: return "linear_move";
        case SkillKind::approach: return "approach";
        case SkillKind::slide: return "slide";
        case SkillKind::pitch_pivot: return "pitch_pivot";
        case SkillKind::yaw_pivot: return "yaw_pivot";
    }
    return "?";
}

enum class StopReason { goal_monitor, contact_detected, timeout, force_limit };

inline const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::goal_monitor: return "goal_monitor";
        case StopReason::contact_detected: return "contact_detected";
        case StopReason::timeout: return "timeout";
        case StopReason::force_limit: return "force_limit";
    }
    return "?";
}

// Decoded skill parameters. One struct per skill keeps the learnable
// surface explicit; the set carries all of them because the terminal macro
// consumes the full vector.
struct LinParams {
    double dpx = 0.0;   // pre-position shift along X (m)
    double phib = 0.0;  // pre-position pitch shift (rad)
};

struct ApproachParams {
    double vz = 0.0;  // descent speed (m/s, commanded downward)
    double fz = 0.0;  // press force after contact (N)
};

struct SlideParams {
    double vxz = 0.0;      // sliding speed (m/s)
    double fslide = 0.0;   // sliding-direction force cap (N)
    double ftarget = 0.0;  // normal-force setpoint during the slide (N)
    double cpd = 0.0;      // admittance gain of the slide force controller
};

struct PivotParams {
    double phib = 0.0;   // pitch target (rad)
    double omega = 0.0;  // rotation speed (rad/s)
    double phic = 0.0;   // yaw target for the correcting pivot (rad)
    double fx = 0.0;     // lateral force target during rotation (N)
    double fz = 0.0;     // downward force target during rotation (N)
};

struct ParamSet {
    LinParams lin;
    ApproachParams approach;
    SlideParams slide;
    PivotParams pivot;
};

// Policy action: a skill selector plus the normalized parameter vector in
// the frozen order
//   [lin.dpx, lin.phib, approach.vz, approach.fz,
//    slide.vxz, slide.fslide, slide.ftarget, slide.cpd,
//    pivot.phib, pivot.omega, pivot.phic, pivot.fx, pivot.fz].
struct Action {
    static constexpr std::size_t kParamCount = 13;
    static constexpr std::size_t kDim = kParamCount + 1;

    double selector = -1.0;
    std::array<double, kParamCount> u{};

    std::array<double, kDim> flat() const {
        std::array<double, kDim> out{};
        out[0] = selector;
        for (std::size_t i = 0; i < kParamCount; ++i) out[i + 1] = u[i];
        return out;
    }

    static Action from_flat(const std::array<double, kDim>& v) {
        Action a;
        a.selector = v[0];
        for (std::size_t i = 0; i < kParamCount; ++i) a.u[i] = v[i + 1];
        return a;
    }
};

struct DecodedAction {
    bool pivot_only = false;  // selector >= 0 picks the standalone pivot
    ParamSet params;
};

namespace detail {

inline double denorm(const Range& r, double u) { return r.mid() + r.half() * u; }
inline double norm(const Range& r, double v) {
    if (!(r.half() > 0.0)) throw std::invalid_argument("degenerate range");
    return (v - r.mid()) / r.half();
}

}  // namespace detail

// Affine decode of a normalized action against the configured ranges.
inline DecodedAction decode_action(const Action& a,
                                   const Scenario::Skills& cfg) {
    // Endpoint encodings can land a rounding ulp outside the interval;
    // anything further out is a malformed action.
    constexpr double tol = 1e-9;
    const auto check = [](double v) {
        if (!(v >= -1.0 - tol && v <= 1.0 + tol)) {
            throw std::invalid_argument("unnormalized action");
        }
        return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
    };
    Action a2 = a;
    a2.selector = check(a.selector);
    for (double& v : a2.u) v = check(v);

    DecodedAction d;
    d.pivot_only = a2.selector >= 0.0;
    const auto& au = a2.u;
    using detail::denorm;
    d.params.lin.dpx = denorm(cfg.lin_dpx, au[0]);
    d.params.lin.phib = denorm(cfg.lin_phib, au[1]);
    d.params.approach.vz = denorm(cfg.approach_vz, au[2]);
    d.params.approach.fz = denorm(cfg.approach_fz, au[3]);
    d.params.slide.vxz = denorm(cfg.slide_vxz, au[4]);
    d.params.slide.fslide = denorm(cfg.slide_fslide, au[5]);
    d.params.slide.ftarget = denorm(cfg.slide_ftarget, au[6]);
    d.params.slide.cpd = denorm(cfg.slide_cpd, au[7]);
    d.params.pivot.phib = denorm(cfg.pivot_phib, au[8]);
    d.params.pivot.omega = denorm(cfg.pivot_omega, au[9]);
    d.params.pivot.phic = denorm(cfg.pivot_phic, au[10]);
    d.params.pivot.fx = denorm(cfg.pivot_fx, au[11]);
    d.params.pivot.fz = denorm(cfg.pivot_fz, au[12]);
    return d;
}

// Inverse of decode_action over the parameter part.
inline Action encode_action(const DecodedAction& d,
                            const Scenario::Skills& cfg) {
    Action a;
    a.selector = d.pivot_only ? 1.0 : -1.0;
    using detail::norm;
    a.u[0] = norm(cfg.lin_dpx, d.params.lin.dpx);
    a.u[1] = norm(cfg.lin_phib, d.params.lin.phib);
    a.u[2] = norm(cfg.approach_vz, d.params.approach.vz);
    a.u[3] = norm(cfg.approach_fz, d.params.approach.fz);
    a.u[4] = norm(cfg.slide_vxz, d.params.slide.vxz);
    a.u[5] = norm(cfg.slide_fslide, d.params.slide.fslide);
    a.u[6] = norm(cfg.slide_ftarget, d.params.slide.ftarget);
    a.u[7] = norm(cfg.slide_cpd, d.params.slide.cpd);
    a.u[8] = norm(cfg.pivot_phib, d.params.pivot.phib);
    a.u[9] = norm(cfg.pivot_omega, d.params.pivot.omega);
    a.u[10] = norm(cfg.pivot_phic, d.params.pivot.phic);
    a.u[11] = norm(cfg.pivot_fx, d.params.pivot.fx);
    a.u[12] = norm(cfg.pivot_fz, d.params.pivot.fz);
    return a;
}

// Static description of a skill: the seven parts. Execution interprets the
// monitors; the description is introspectable and checkable.
struct SkillSpec {
    std::string name;
    std::vector<std::string> frames;       // kinematic frame bindings
    std::vector<std::string> tasks;        // controlled axes
    std::vector<std::string> scripts;      // phase scripts, in order
    std::vector<StopReason> monitors;      // stop conditions, non-empty
    std::vector<std::string> transitions;  // follow-up skills offered
    std::vector<SkillKind> sub_skills;     // empty for leaf skills
};

inline SkillSpec skill_spec(SkillKind k) {
    SkillSpec s;
    s.name = skill_name(k);
    s.monitors = {StopReason::timeout, StopReason::force_limit};
    switch (k) {
        case SkillKind::linear_move:
            s.frames = {"world", "terminal"};
            s.tasks = {"x displacement", "pitch displacement"};
            s.scripts = {"free-space reposition"};
            s.monitors.insert(s.monitors.begin(), StopReason::goal_monitor);
            s.transitions = {"approach"};
            break;
        case SkillKind::approach:
            s.frames = {"world", "terminal"};
            s.tasks = {"z velocity", "z force"};
            s.scripts = {"descend", "press"};
            s.monitors.insert(s.monitors.begin(),
                              StopReason::contact_detected);
            s.transitions = {"slide"};
            break;
        case SkillKind::slide:
            s.frames = {"rail top", "terminal"};
            s.tasks = {"x velocity", "z force"};
            s.scripts = {"pressed slide"};
            s.monitors.insert(s.monitors.begin(),
                              StopReason::contact_detected);
            s.transitions = {"pitch_pivot"};
            break;
        case SkillKind::pitch_pivot:
            s.frames = {"contact anchor", "terminal"};
            s.tasks = {"pitch rate", "x force", "z force"};
            s.scripts = {"rotate about anchor"};
            s.monitors.insert(s.monitors.begin(), StopReason::goal_monitor);
            s.transitions = {"yaw_pivot"};
            break;
        case SkillKind::yaw_pivot:
            s.frames = {"contact anchor", "terminal"};
            s.tasks = {"yaw rate", "x force", "z force"};
            s.scripts = {"moment-guided correction"};
            s.monitors.insert(s.monitors.begin(), StopReason::goal_monitor);
            s.transitions = {};
            break;
    }
    return s;
}

inline const std::vector<SkillKind>& terminal_sequence() {
    static const std::vector<SkillKind> seq = {
        SkillKind::linear_move, SkillKind::approach, SkillKind::slide,
        SkillKind::pitch_pivot, SkillKind::yaw_pivot};
    return seq;
}

inline const std::vector<SkillKind>& pivot_sequence() {
    static const std::vector<SkillKind> seq = {SkillKind::pitch_pivot,
                                               SkillKind::yaw_pivot};
    return seq;
}

inline SkillSpec macro_spec(bool pivot_only) {
    SkillSpec s;
    s.name = pivot_only ? "pivot_macro" : "terminal_macro";
    s.frames = {"world"};
    s.tasks = {"sub-skill dispatch"};
    s.scripts = {"run sub-skills in order"};
    s.monitors = {StopReason::goal_monitor, StopReason::force_limit,
                  StopReason::timeout};
    s.sub_skills = pivot_only ? pivot_sequence() : terminal_sequence();
    return s;
}

inline void validate(const SkillSpec& s) {
    if (s.monitors.empty()) {
        throw std::invalid_argument("skill without monitors: " + s.name);
    }
    // The composition is one level deep by construction; sub-skills must be
    // leaves, which is what keeps the graph acyclic.
    for (SkillKind k : s.sub_skills) {
        if (!skill_spec(k).sub_skills.empty()) {
            throw std::invalid_argument("nested composite skill: " + s.name);
        }
    }
}

struct SkillLogRow {
    double t = 0.0;
    PlanarPose pose;
    double yaw = 0.0;
    Observation obs;
    double overlap = 0.0;
    JoiningForces joining;  // model output at this step, zero when separated
};

struct SkillLog {
    SkillKind kind = SkillKind::linear_move;
    StopReason stop = StopReason::timeout;
    double duration = 0.0;  // simulated seconds inside this skill
    int steps = 0;
    bool tunneling = false;  // any overlap discontinuity while running
    std::vector<SkillLogRow> rows;
};

namespace detail {

// Rotation-dominant pivot admittance: softer than the free-space default so
// the commanded rotation, not the force controller, closes the snap flank.
constexpr double kPivotGain = 3e-4;

class SkillRunner {
  public:
    SkillRunner(World& w, bool record) : w_(w), record_(record) {}

    SkillLog run(SkillKind kind, const ParamSet& p, double timeout) {
        log_ = SkillLog{};
        log_.kind = kind;
        baseline_ = w_.sense();
        last_ = baseline_;
        record_row(baseline_);
        switch (kind) {
            case SkillKind::linear_move: run_linear(p.lin); break;
            case SkillKind::approach: run_approach(p.approach, timeout); break;
            case SkillKind::slide: run_slide(p.slide, timeout); break;
            case SkillKind::pitch_pivot: run_pitch(p.pivot, timeout); break;
            case SkillKind::yaw_pivot: run_yaw(p.pivot, timeout); break;
        }
        return log_;
    }

  private:
    void record_row(const Observation& obs) {
        if (!record_) return;
        SkillLogRow row;
        row.t = w_.state().elapsed;
        row.pose = w_.state().pose;
        row.yaw = w_.state().yaw;
        row.obs = obs;
        row.overlap = w_.state().overlap_history.empty()
                          ? 0.0
                          : w_.state().overlap_history.back();
        row.joining = w_.state().joining;
        log_.rows.push_back(row);
    }

    // One monitored control step. Returns false when the skill must stop.
    bool tick(const ControlCommand& cmd) {
        const double dt = w_.scenario().control.dt;
        try {
            w_.step_control(cmd, dt);
        } catch (const std::runtime_error&) {
            // Force limit: the world has already recorded the hit.
            log_.stop = StopReason::force_limit;
            finish_step(dt);
            return false;
        }
        finish_step(dt);
        last_ = w_.sense();
        record_row(last_);
        return true;
    }

    void finish_step(double dt) {
        ++log_.steps;
        log_.duration += dt;
        log_.tunneling = log_.tunneling || w_.state().tunneling_step;
    }

    bool timed_out(double timeout) const { return log_.duration >= timeout; }

    void run_linear(const LinParams& p) {
        log_.stop = StopReason::goal_monitor;
        try {
            w_.displace(p.dpx, 0.0, p.phib);
        } catch (const std::runtime_error&) {
            log_.stop = StopReason::force_limit;
        }
        finish_step(w_.scenario().control.dt);
        if (log_.stop == StopReason::force_limit) return;
        last_ = w_.sense();
        record_row(last_);
    }

    void run_approach(const ApproachParams& p, double timeout) {
        const Scenario::Control& c = w_.scenario().control;
        ControlCommand cmd;
        cmd.z.mode = AxisCommand::Mode::velocity;
        cmd.z.value = -p.vz;
        log_.stop = StopReason::timeout;
        bool touched = false;
        while (!timed_out(timeout)) {
            if (!tick(cmd)) return;
            if (std::abs(last_.wrench[2] - baseline_.wrench[2]) >
                c.contact_threshold) {
                touched = true;
                break;
            }
        }
        if (!touched) return;
        // Settle onto the surface at the commanded press force.
        cmd = ControlCommand{};
        cmd.z.mode = AxisCommand::Mode::force;
        cmd.z.value = -p.fz;
        while (!timed_out(timeout)) {
            if (!tick(cmd)) return;
            if (std::abs(last_.wrench[2] + p.fz) < c.force_band) break;
        }
        log_.stop = StopReason::contact_detected;
    }

    void run_slide(const SlideParams& p, double timeout) {
        const Scenario::Control& c = w_.scenario().control;
        ControlCommand cmd;
        cmd.x.mode = AxisCommand::Mode::velocity;
        cmd.x.value = -p.vxz;
        cmd.z.mode = AxisCommand::Mode::force;
        cmd.z.value = -p.ftarget;
        cmd.admittance_gain = p.cpd;
        log_.stop = StopReason::timeout;
        while (!timed_out(timeout)) {
            if (!tick(cmd)) return;
            const bool blocked =
                std::abs(last_.wrench[0] - baseline_.wrench[0]) >
                    c.contact_threshold ||
                std::abs(last_.wrench[0]) > p.fslide;
            if (blocked) {
                log_.stop = StopReason::contact_detected;
                return;
            }
        }
    }

    void run_pitch(const PivotParams& p, double timeout) {
        const Scenario::Control& c = w_.scenario().control;
        const double dt = c.dt;
        log_.stop = StopReason::timeout;
        while (!timed_out(timeout)) {
            const double rem = p.phib - w_.state().pose.pitch;
            if (std::abs(rem) < c.goal_tol_ang) {
                log_.stop = StopReason::goal_monitor;
                return;
            }
            ControlCommand cmd;
            cmd.x.mode = AxisCommand::Mode::force;
            cmd.x.value = -p.fx;
            cmd.z.mode = AxisCommand::Mode::force;
            cmd.z.value = -p.fz;
            cmd.admittance_gain = kPivotGain;
            cmd.pivot_about_anchor = true;
            double rate = rem / dt;
            if (rate > p.omega) rate = p.omega;
            if (rate < -p.omega) rate = -p.omega;
            cmd.pitch_rate = rate;
            if (!tick(cmd)) return;
        }
    }

    void run_yaw(const PivotParams& p, double timeout) {
        const Scenario::Control& c = w_.scenario().control;
        const double dt = c.dt;
        log_.stop = StopReason::timeout;
        while (!timed_out(timeout)) {
            // With the fixed hook engaged the lip moment is an exact cue for
            // the unobservable rail yaw inside its saturation window; free
            // rotation falls back to the commanded target angle.
            double rem;
            if (w_.state().flags.fixed_hook_engaged) {
                rem = last_.wrench[5] / c.yaw_gain;
            } else {
                rem = p.phic - w_.state().yaw;
            }
            if (std::abs(rem) < c.goal_tol_ang) {
                log_.stop = StopReason::goal_monitor;
                return;
            }
            ControlCommand cmd;
            cmd.x.mode = AxisCommand::Mode::force;
            cmd.x.value = -p.fx;
            cmd.z.mode = AxisCommand::Mode::force;
            cmd.z.value = -p.fz;
            cmd.admittance_gain = kPivotGain;
            double rate = rem / dt;
            if (rate > p.omega) rate = p.omega;
            if (rate < -p.omega) rate = -p.omega;
            cmd.yaw_rate = rate;
            if (!tick(cmd)) return;
        }
    }

    World& w_;
    bool record_;
    SkillLog log_;
    Observation baseline_;
    Observation last_;
};

}  // namespace detail

// Executes one leaf skill until a monitor fires. Always returns within
// timeout plus one control period of simulated time.
inline SkillLog exec_skill(World& w, SkillKind kind, const ParamSet& params,
                           double timeout, bool record_trace = true) {
    detail::SkillRunner runner(w, record_trace);
    return runner.run(kind, params, timeout);
}

struct EpisodeResult {
    bool success = false;
    bool force_limit = false;
    int macros_used = 0;
    int skills_used = 0;
    std::vector<double> macro_rewards;  // overlap penalty included
    double total_return = 0.0;
    std::vector<SkillLog> logs;
};

// Runs up to the configured number of macro actions from the policy. A
// negative selector expands to the five terminal sub-skills, a non-negative
// one to the standalone pivot pair. Stops on success, budget exhaustion, or
// the force limit. Each macro's reward is the world reward after it ran,
// minus 2 per macro that produced an overlap discontinuity.
inline EpisodeResult run_sequence(
    World& w, const std::function<Action(const Observation&)>& policy,
    bool record_trace = false) {
    constexpr double kOverlapPenalty = 2.0;
    const Scenario& sc = w.scenario();
    EpisodeResult res;
    int budget = w.state().skill_budget_remaining;
    while (budget > 0) {
        const Action a = policy(w.sense());
        const DecodedAction d = decode_action(a, sc.skills);
        const auto& seq =
            d.pivot_only ? pivot_sequence() : terminal_sequence();
        bool tunneling = false;
        bool fatal = false;
        for (SkillKind kind : seq) {
            SkillLog log =
                exec_skill(w, kind, d.params, sc.skills.timeout, record_trace);
            ++res.skills_used;
            tunneling = tunneling || log.tunneling;
            const bool limit = log.stop == StopReason::force_limit;
            res.logs.push_back(std::move(log));
            if (limit) {
                fatal = true;
                res.force_limit = true;
                break;
            }
        }
        ++res.macros_used;
        --budget;
        w.state().skill_budget_remaining = budget;
        const double r =
            w.reward() - (tunneling ? kOverlapPenalty : 0.0);
        res.macro_rewards.push_back(r);
        res.total_return += r;
        if (fatal || w.is_success()) break;
    }
    res.success = w.is_success();
    return res;
}

// The scripted ideal action for the nominal scenario: one terminal macro
// whose parameters reproduce the hand-tuned assembly trajectory.
inline Action nominal_action(const Scenario& s) {
    DecodedAction d;
    d.pivot_only = false;
    d.params.lin.dpx = 0.0;
    d.params.lin.phib = 0.0;
    d.params.approach.vz = 10e-3;
    d.params.approach.fz = 8.0;
    d.params.slide.vxz = 5e-3;
    d.params.slide.fslide = 30.0;
    d.params.slide.ftarget = 5.0;
    d.params.slide.cpd = 5e-4;
    d.params.pivot.phib = 0.0;
    d.params.pivot.omega = 0.15;
    d.params.pivot.phic = 0.0;
    d.params.pivot.fx = 10.0;
    d.params.pivot.fz = 6.0;
    return encode_action(d, s.skills);
}

}  // namespace snapfit
