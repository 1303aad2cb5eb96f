#pragma once

// Planar quasi-static assembly world: one terminal, one rail, force-sensed
// compliant motion. The rail is reduced to the features the terminal can
// touch (top bearing plane, right edge face, lip undersides); the hat
// interior is out of scope. The terminal is reduced to designated contact
// points: two base pads, the fixed-hook (claw) tip and side wall, and the
// snap-hook head, whose edge interaction is owned entirely by the
// deflection ray measurement plus the joining-force model.
//
// Sensor convention: the wrench is what a wrist sensor reads, i.e. the
// reaction of the environment on the terminal with rigid contacts entering
// negatively (pressing down on the rail reads F_z < 0). The joining model's
// components are added literally on (X, Z) so that a pose whose only
// interaction is the snap head reproduces the standalone force pipeline.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <snapfit/beam.hpp>
#include <snapfit/geometry.hpp>
#include <snapfit/lumped.hpp>
#include <snapfit/random.hpp>
#include <snapfit/scenario.hpp>

namespace snapfit {

struct RailConfig {
    double offset = 0.0;  // lateral displacement of the rail center
    double yaw = 0.0;     // rail yaw relative to the robot base
    double mount = 0.0;   // mount position along the rail run

    // Yaw at an off-center mount position appears in the assembly plane as
    // additional lateral offset.
    double effective_offset() const { return offset + mount * std::tan(yaw); }
};

struct Wrench {
    std::array<double, 3> force{};
    std::array<double, 3> moment{};
};

struct Observation {
    std::array<double, 3> p_rel{};
    std::array<double, 4> quat{};  // w, x, y, z
    std::array<double, 6> wrench{};

    std::array<double, 13> flat() const {
        return {p_rel[0],  p_rel[1],  p_rel[2],  quat[0],   quat[1],
                quat[2],   quat[3],   wrench[0], wrench[1], wrench[2],
                wrench[3], wrench[4], wrench[5]};
    }
};

struct ContactFlags {
    bool base_contact = false;        // bearing on the rail top plane
    bool fixed_hook_engaged = false;  // claw met the right edge (sticky)
    bool snap_engaged = false;        // snap head has deflected (sticky)
    bool snap_latched = false;        // head seated under the lip (sticky)
};

struct AxisCommand {
    enum class Mode { hold, velocity, force };
    Mode mode = Mode::hold;
    // m/s in velocity mode; target sensed force in N in force mode
    // (pressing down regulates toward a negative F_z).
    double value = 0.0;
};

struct ControlCommand {
    AxisCommand x;
    AxisCommand z;
    double pitch_rate = 0.0;  // rad/s
    double yaw_rate = 0.0;    // rad/s
    // Rotate about the stored fixed-hook contact anchor instead of the
    // terminal origin.
    bool pivot_about_anchor = false;
    double admittance_gain = 5e-4;  // m/s per N on force-mode axes
};

struct WorldState {
    PlanarPose pose;   // terminal frame in world coordinates
    double yaw = 0.0;  // decoupled out-of-plane angle theta_C
    RailConfig rail;
    ContactFlags flags;
    JoiningModel joining_model = JoiningModel::analytic;
    LumpedModel lumped;     // advanced only for the lumped joining models
    JoiningForces joining;  // latest joining-model output, single beam
    int skill_budget_remaining = 0;
    double elapsed = 0.0;
    std::vector<double> overlap_history;
    bool tunneling = false;       // positive overlap jump seen (sticky)
    bool tunneling_step = false;  // ... during the latest step
    bool force_limit_hit = false;
    Vec2 pivot_anchor{};
    bool pivot_anchor_valid = false;
};

class World {
  public:
    // Velocities are saturated here; faster commands than any skill issues
    // indicate a runaway admittance loop, not a legitimate motion.
    static constexpr double kMaxSpeed = 0.05;  // m/s
    // Base pads sit on the terminal underside where it seats on the rail
    // flange tops; the claw tip reaches under the right lip by a fixed bite.
    static constexpr double kPadSpacing = 15e-3;
    static constexpr double kClawReach = 1.5e-3;
    static constexpr double kClawBite = 0.3e-3;
    static constexpr double kClawWallHeight = 20e-3;
    static constexpr double kLipSpan = 6.5e-3;  // flange plate width

    World(const Scenario& s, std::uint64_t seed)
        : scenario_(s),
          hook_(effective_hook(s.hook)),
          rng_(seed) {
        hook_.validate();
        scenario_.rail.validate();
        bp_ = beam_params_for(hook_, s.beam.secant_modulus, s.beam.friction);
        bp_.length_mode = s.beam.length_mode;
        mount_ = HookMount::from(hook_, scenario_.rail);
        const double wp = 1e-3, wa = deg2rad(1.0);
        const auto& c = scenario_.control;
        d_norm_ = std::sqrt((c.pre_x / wp) * (c.pre_x / wp) +
                            (c.pre_z / wp) * (c.pre_z / wp) +
                            (c.pre_pitch / wa) * (c.pre_pitch / wa));
        reset(RailConfig{});
    }

    static RailConfig randomize(const Scenario::Randomization& cfg, Rng& rng) {
        RailConfig rc;
        rc.offset = rng.uniform(-cfg.offset_range, cfg.offset_range);
        rc.yaw = rng.uniform(-cfg.yaw_range, cfg.yaw_range);
        return rc;
    }

    void reset() { reset(randomize(scenario_.randomization, rng_)); }

    void reset(const RailConfig& rail) {
        state_ = WorldState{};
        state_.rail = rail;
        state_.joining_model = scenario_.control.joining_model;
        state_.skill_budget_remaining = scenario_.train.skill_budget;
        const auto& c = scenario_.control;
        // The pre-position is taken relative to the nominal rail location;
        // the actual rail displacement is unknown to the controller.
        state_.pose = PlanarPose{c.pre_x, c.pre_z, c.pre_pitch};
        state_.yaw = 0.0;
        if (state_.joining_model != JoiningModel::analytic) {
            state_.lumped = build(to_variant(state_.joining_model), hook_,
                                  bp_, scenario_.lumped.density,
                                  scenario_.lumped.epsilon);
        }
        append_overlap(deflection().deflection);
        state_.tunneling = false;
        state_.tunneling_step = false;
    }

    const Scenario& scenario() const { return scenario_; }
    const SnapHookProfile& hook() const { return hook_; }
    const BeamParams& beam_params() const { return bp_; }
    const WorldState& state() const { return state_; }
    WorldState& state() { return state_; }
    Rng& rng() { return rng_; }
    double normalization_distance() const { return d_norm_; }

    PlanarPose rail_relative_pose() const {
        return PlanarPose{state_.pose.x - state_.rail.effective_offset(),
                          state_.pose.z, state_.pose.pitch};
    }

    DeflectionMeasurement deflection() const {
        return measure_deflection(hook_, scenario_.rail, rail_relative_pose());
    }

    // Sensed interaction wrench; see the sign convention above.
    Wrench contact_wrench() const {
        Wrench w;
        const double k = scenario_.control.contact_stiffness;
        for (const Vec2& p : bearing_points()) {
            w.force[2] -= k * top_penetration(p);
        }
        w.force[2] -= k * claw_tip_vertical();  // negative pen pushes down
        w.force[0] -= k * claw_edge_penetration();
        const JoiningForces jf = current_joining();
        const double n = static_cast<double>(scenario_.beam_count);
        w.force[0] += n * jf.lateral;
        w.force[2] += n * jf.joining;
        if (state_.flags.fixed_hook_engaged) {
            const auto& c = scenario_.control;
            double err = state_.yaw - state_.rail.yaw;
            const double sat = c.yaw_cue_saturation;
            if (err > sat) err = sat;
            if (err < -sat) err = -sat;
            w.moment[2] = -c.yaw_gain * err;
        }
        return w;
    }

    // Noisy force reading; moments and pose channels are clean.
    Observation sense() {
        Observation o;
        const double rx0 = 0.0;  // nominal goal: rail at the origin
        o.p_rel = {state_.pose.x - rx0, 0.0, state_.pose.z};
        o.quat = orientation();
        const Wrench w = contact_wrench();
        const double sigma = scenario_.randomization.force_noise;
        for (int i = 0; i < 3; ++i) {
            double f = w.force[i];
            if (sigma > 0.0) f += rng_.normal(0.0, sigma);
            o.wrench[static_cast<std::size_t>(i)] = f;
            o.wrench[static_cast<std::size_t>(i + 3)] = w.moment[i];
        }
        return o;
    }

    std::array<double, 4> orientation() const {
        // q = qz(yaw) * qy(pitch); planar poses keep it unit by construction.
        const double cy = std::cos(0.5 * state_.yaw);
        const double sy = std::sin(0.5 * state_.yaw);
        const double cp = std::cos(0.5 * state_.pose.pitch);
        const double sp = std::sin(0.5 * state_.pose.pitch);
        std::array<double, 4> q{cy * cp, -sy * sp, cy * sp, sy * cp};
        const double norm =
            std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (double& v : q) v /= norm;
        return q;
    }

    // Instantaneous pre-positioning displacement. Passes through the same
    // bookkeeping as a control step so a jump over the head registers in the
    // overlap history.
    void displace(double dx, double dz, double dpitch) {
        state_.pose.x += dx;
        state_.pose.z += dz;
        state_.pose.pitch += dpitch;
        post_move(scenario_.control.dt);
    }

    void step_control(const ControlCommand& cmd, double dt) {
        if (!(dt > 0.0) || dt > 0.05) {
            throw std::invalid_argument("control period out of range");
        }
        const Wrench before = contact_wrench();
        const double vx =
            axis_velocity(cmd.x, before.force[0], cmd.admittance_gain, dt);
        const double vz =
            axis_velocity(cmd.z, before.force[2], cmd.admittance_gain, dt);
        state_.pose.x += vx * dt;
        state_.pose.z += vz * dt;
        const double dpitch = cmd.pitch_rate * dt;
        if (dpitch != 0.0 && cmd.pivot_about_anchor) {
            rotate_about(anchor_point(), dpitch);
        } else {
            state_.pose.pitch += dpitch;
        }
        state_.yaw += cmd.yaw_rate * dt;
        post_move(dt);
    }

    // Weighted assembly distance to the goal pose: seated on the actual
    // rail, aligned with its yaw. Millimetres and degrees weigh equally.
    double distance() const {
        const double wp = 1e-3, wa = deg2rad(1.0);
        const double rx = state_.rail.effective_offset();
        const double dx = (state_.pose.x - rx) / wp;
        const double dz = state_.pose.z / wp;
        const double db = state_.pose.pitch / wa;
        const double dc = (state_.yaw - state_.rail.yaw) / wa;
        return std::sqrt(dx * dx + dz * dz + db * db + dc * dc);
    }

    double reward() const { return -distance() / d_norm_; }

    bool is_success() const {
        if (!state_.flags.snap_latched) return false;
        const double rx = state_.rail.effective_offset();
        const double dpos = std::hypot(state_.pose.x - rx, state_.pose.z);
        const double dyaw = std::abs(state_.yaw - state_.rail.yaw);
        return dpos < scenario_.success.pos_tol &&
               dyaw < scenario_.success.yaw_tol;
    }

  private:
    static LumpedVariant to_variant(JoiningModel m) {
        switch (m) {
            case JoiningModel::slide: return LumpedVariant::slide;
            case JoiningModel::one_hinge: return LumpedVariant::one_hinge;
            case JoiningModel::two_hinge: return LumpedVariant::two_hinge;
            default: break;
        }
        throw std::logic_error("analytic model has no lumped variant");
    }

    // Underside points that can rest on the rail top. The right side never
    // seats on top: at assembly tilts it hangs in the under-flange pocket
    // and is referenced through the claw instead, so a pad there would have
    // to cross the flange plate from below on the way to flat.
    std::array<Vec2, 3> bearing_points() const {
        return {state_.pose.to_world(Vec2{-kPadSpacing, 0.0}),
                state_.pose.to_world(Vec2{mount_.face_x, mount_.bottom_z}),
                claw_tip_world()};
    }

    Vec2 claw_tip_world() const {
        const double cfx =
            0.5 * scenario_.rail.width + scenario_.rail.fixed_hook_clearance;
        return state_.pose.to_world(
            Vec2{cfx - kClawReach,
                 -(scenario_.rail.lip_depth + kClawBite)});
    }

    bool over_rail(double x) const {
        const double rx = state_.rail.effective_offset();
        const double half = 0.5 * scenario_.rail.width;
        return x >= rx - half && x <= rx + half;
    }

    // Bearing on the top plane: only while within one plate thickness of
    // the surface. A point deeper than that has passed beneath the flanges,
    // whose underside space is open in this reduction.
    double top_penetration(const Vec2& p) const {
        if (!over_rail(p.x)) return 0.0;
        const double pen = -p.z;
        if (pen <= 0.0 || pen > scenario_.rail.lip_depth) return 0.0;
        return pen;
    }

    // The claw tip inside the right flange plate is pushed out through the
    // nearest face; from below that is the lip underside (the catch that
    // resists lifting a hooked claw). Returns a signed penetration: positive
    // pushes up (already counted as bearing), negative pushes down.
    double claw_tip_vertical() const {
        const Vec2 tip = claw_tip_world();
        const double rx = state_.rail.effective_offset();
        const double xr = rx + 0.5 * scenario_.rail.width;
        const double lip = scenario_.rail.lip_depth;
        if (tip.x < xr - kLipSpan || tip.x > xr) return 0.0;
        if (tip.z >= 0.0 || tip.z <= -lip) return 0.0;
        const double from_top = -tip.z;
        const double from_bottom = tip.z + lip;
        // Upper half handled by the generic bearing path; lower half caught.
        return from_bottom < from_top ? -from_bottom : 0.0;
    }

    struct EdgeContact {
        double penetration = 0.0;
        Vec2 point{};
    };

    // Penetration of the terminal's right side wall into the rail's right
    // edge face, evaluated where the wall crosses the lip band.
    EdgeContact claw_edge_contact() const {
        const double cfx =
            0.5 * scenario_.rail.width + scenario_.rail.fixed_hook_clearance;
        const double lip = scenario_.rail.lip_depth;
        const Vec2 lo = state_.pose.to_world(Vec2{cfx, -(lip + kClawBite)});
        const Vec2 hi = state_.pose.to_world(Vec2{cfx, kClawWallHeight});
        const double zc = -0.5 * lip;  // band centre
        const double dz = hi.z - lo.z;
        double t = dz != 0.0 ? (zc - lo.z) / dz : 0.0;
        if (t < 0.0) t = 0.0;
        if (t > 1.0) t = 1.0;
        EdgeContact out;
        out.point = Vec2{lo.x + t * (hi.x - lo.x), lo.z + t * (hi.z - lo.z)};
        if (out.point.z < -lip || out.point.z > 0.0) return out;
        const double rx = state_.rail.effective_offset();
        const double pen = rx + 0.5 * scenario_.rail.width - out.point.x;
        if (pen > 0.0) out.penetration = pen;
        return out;
    }

    double claw_edge_penetration() const {
        return claw_edge_contact().penetration;
    }

    JoiningForces current_joining() const {
        if (state_.joining_model == JoiningModel::analytic) {
            return analytic_joining_or_jam();
        }
        return state_.joining;
    }

    // A closed friction cone means no finite push advances the head: the
    // joint jams. Report a wall of force well past the safety limit so the
    // monitor aborts the move instead of a math error unwinding the loop.
    JoiningForces analytic_joining_or_jam() const {
        try {
            return analytic_wrench(hook_, scenario_.rail, bp_,
                                   rail_relative_pose(),
                                   scenario_.beam.corrected);
        } catch (const std::domain_error&) {
            const double wall = 4.0 * scenario_.control.force_limit;
            return {wall, wall};
        }
    }

    Vec2 anchor_point() const {
        if (state_.pivot_anchor_valid) return state_.pivot_anchor;
        // No identified contact: fall back to the claw wall's current
        // lip-band crossing so the rotation is still well defined.
        return claw_edge_contact().point;
    }

    void rotate_about(const Vec2& p, double dth) {
        const double c = std::cos(dth), s = std::sin(dth);
        const double dx = state_.pose.x - p.x;
        const double dz = state_.pose.z - p.z;
        state_.pose.x = p.x + c * dx - s * dz;
        state_.pose.z = p.z + s * dx + c * dz;
        state_.pose.pitch += dth;
    }

    double axis_velocity(const AxisCommand& c, double f_meas, double gain,
                         double dt) const {
        double v = 0.0;
        switch (c.mode) {
            case AxisCommand::Mode::hold: return 0.0;
            case AxisCommand::Mode::velocity: v = c.value; break;
            case AxisCommand::Mode::force: {
                // One-step contact-spring response bounds the usable gain.
                const double cap =
                    0.8 / (scenario_.control.contact_stiffness * dt);
                const double g = gain < cap ? gain : cap;
                v = g * (c.value - f_meas);
                break;
            }
        }
        if (v > kMaxSpeed) v = kMaxSpeed;
        if (v < -kMaxSpeed) v = -kMaxSpeed;
        return v;
    }

    void post_move(double dt) {
        const DeflectionMeasurement d = deflection();
        advance_joining(d, dt);
        update_flags(d);
        append_overlap(d.deflection);
        state_.elapsed += dt;
        check_force_limit();
    }

    void advance_joining(const DeflectionMeasurement& d, double dt) {
        if (state_.joining_model == JoiningModel::analytic) {
            state_.joining = analytic_joining_or_jam();
            return;
        }
        const int n = static_cast<int>(
            std::ceil(dt / scenario_.lumped.dt - 1e-12));
        if (n <= 0) return;
        const double h = dt / n;
        for (int i = 0; i < n; ++i) {
            try {
                state_.joining =
                    step(state_.lumped, d.deflection, d.flank_angle,
                         scenario_.beam.friction, h);
            } catch (const std::domain_error&) {
                const double wall = 4.0 * scenario_.control.force_limit;
                state_.joining = {wall, wall};
                break;
            }
        }
    }

    void update_flags(const DeflectionMeasurement& d) {
        bool bearing = false;
        for (const Vec2& p : bearing_points()) {
            if (top_penetration(p) > 0.0) bearing = true;
        }
        state_.flags.base_contact = bearing;
        const EdgeContact edge = claw_edge_contact();
        if (edge.penetration > 0.0) {
            if (!state_.flags.fixed_hook_engaged) {
                state_.pivot_anchor = edge.point;
                state_.pivot_anchor_valid = true;
            }
            state_.flags.fixed_hook_engaged = true;
        }
        if (d.deflection > 0.0) state_.flags.snap_engaged = true;
        // A latch is only recognised after the beam actually deflected;
        // materialising inside the latched region is not an assembly.
        if (state_.flags.snap_engaged &&
            head_latched(hook_, scenario_.rail, rail_relative_pose())) {
            state_.flags.snap_latched = true;
        }
    }

    void append_overlap(double f) {
        state_.tunneling_step = false;
        if (!state_.overlap_history.empty()) {
            const double jump = f - state_.overlap_history.back();
            if (jump > scenario_.control.overlap_jump) {
                state_.tunneling_step = true;
                state_.tunneling = true;
            }
        }
        state_.overlap_history.push_back(f);
    }

    void check_force_limit() {
        const Wrench w = contact_wrench();
        const double lim = scenario_.control.force_limit;
        for (double f : w.force) {
            if (std::abs(f) > lim) {
                state_.force_limit_hit = true;
                throw std::runtime_error("force limit exceeded");
            }
        }
    }

    Scenario scenario_;
    SnapHookProfile hook_;
    BeamParams bp_;
    HookMount mount_;
    Rng rng_;
    WorldState state_;
    double d_norm_ = 1.0;
};

}  // namespace snapfit
