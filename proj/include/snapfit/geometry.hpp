#pragma once

// Planar geometry of the snap-fit pair: snap-hook head contours, the DIN-rail
// edge they ride over, and the ray measurement that converts interpenetration
// into the beam deflection required to resolve it.
//
// All quantities are SI (meters, radians). The sagittal plane is X-Z with X
// pointing from the snap-hook side towards the fixed-hook side and Z up. The
// rail frame has its origin on the rail axis at the top surface, so the top
// plane is z = 0 and the edges sit at x = +-width/2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace snapfit {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec2 {
    double x = 0.0;
    double z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.z}; }

// Pose of one planar frame in another: translation plus pitch (rotation about
// the out-of-plane Y axis, counterclockwise positive when X points right and
// Z up).
struct PlanarPose {
    double x = 0.0;
    double z = 0.0;
    double pitch = 0.0;

    Vec2 to_world(Vec2 local) const {
        const double c = std::cos(pitch), s = std::sin(pitch);
        return {x + c * local.x - s * local.z, z + s * local.x + c * local.z};
    }
    Vec2 to_local(Vec2 world) const {
        const double c = std::cos(pitch), s = std::sin(pitch);
        const double dx = world.x - x, dz = world.z - z;
        return {c * dx + s * dz, -s * dx + c * dz};
    }
};

// Head contour families. All three share the joining flank that rises at the
// joining angle up to the head height; they differ past the apex:
//   I   immediate (near-vertical) declining edge
//   II  plateau at full height, then the same sharp decline
//   III plateau, then a linear ramp back to zero
enum class ContourClass { I, II, III };

enum class RecessSide { none, left, right };

// Declining edges are modeled as a steep but finite flank so the contour stays
// a continuous, total function of arc length.
inline constexpr double kSharpDropAngle = deg2rad(89.0);

// Clearance between the top of the head footprint and the lip underside in the
// seated pose; keeps the latched head from re-engaging the measurement corner.
inline constexpr double kLatchMargin = 0.2e-3;

struct SnapHookProfile {
    double beam_length = 9e-3;      // flexing cantilever length l
    double beam_width = 4e-3;       // cross-section width b
    double beam_thickness = 2e-3;   // cross-section thickness h (bend direction)
    double head_height = 2e-3;      // protrusion of the head apex h_k
    double joining_angle = deg2rad(20.0); // rise flank angle alpha
    double overlap_value = 0.5e-3;  // lateral margin s between face and edge when seated
    ContourClass contour = ContourClass::II;
    double plateau_length = 1e-3;   // classes II/III
    double ramp_length = 2e-3;      // class III
    RecessSide recess_side = RecessSide::none;
    double recess_angle_delta = deg2rad(5.0);

    double rise_length() const { return head_height / std::tan(joining_angle); }
    double drop_length() const { return head_height / std::tan(kSharpDropAngle); }

    double footprint_length() const {
        switch (contour) {
            case ContourClass::I: return rise_length() + drop_length();
            case ContourClass::II: return rise_length() + plateau_length + drop_length();
            case ContourClass::III: return rise_length() + plateau_length + ramp_length;
        }
        return 0.0;
    }

    void validate() const {
        auto bad = [](const std::string& field) {
            throw std::invalid_argument("invalid snap-hook profile: " + field);
        };
        if (!(beam_length > 0.0)) bad("beam_length");
        if (!(beam_width > 0.0)) bad("beam_width");
        if (!(beam_thickness > 0.0)) bad("beam_thickness");
        if (!(head_height > 0.0)) bad("head_height");
        if (!(joining_angle > 0.0 && joining_angle < kPi / 2.0)) bad("joining_angle");
        if (!(overlap_value <= head_height)) bad("overlap_value");
        if (contour != ContourClass::I && !(plateau_length > 0.0)) bad("plateau_length");
        if (contour == ContourClass::III && !(ramp_length > 0.0)) bad("ramp_length");
    }
};

// Top-hat rail cross-section reduced to the features the terminal touches:
// the top plane, the two edge faces, and the lip undersides the hooks grab.
struct RailProfile {
    double width = 35e-3;
    double edge_height = 7.5e-3;
    double lip_depth = 1e-3;             // vertical extent of the edge face / lip plate
    double fixed_hook_clearance = 0.2e-3;

    void validate() const {
        auto bad = [](const std::string& field) {
            throw std::invalid_argument("invalid rail profile: " + field);
        };
        if (!(width > 0.0)) bad("width");
        if (!(edge_height > 0.0)) bad("edge_height");
        if (!(lip_depth > 0.0 && lip_depth < edge_height)) bad("lip_depth");
        if (!(fixed_hook_clearance >= 0.0)) bad("fixed_hook_clearance");
    }
};

// Protrusion of the head surface at arc position x along the joining
// direction. x = 0 is the head tip (the lower end, met first during joining);
// x increases towards the clamped end of the beam. Zero outside the footprint.
inline double head_contour(const SnapHookProfile& p, double x) {
    const double lr = p.rise_length();
    const double hk = p.head_height;
    if (x <= 0.0) return 0.0;
    if (x < lr) return x * std::tan(p.joining_angle);

    double past = x - lr;
    if (p.contour == ContourClass::II || p.contour == ContourClass::III) {
        if (past < p.plateau_length) return hk;
        past -= p.plateau_length;
    }
    if (p.contour == ContourClass::III) {
        if (past < p.ramp_length) return hk * (1.0 - past / p.ramp_length);
        return 0.0;
    }
    const double drop = p.drop_length();
    if (past < drop) return hk - past * std::tan(kSharpDropAngle);
    return 0.0;
}

// Signed local flank angle at arc position x: positive on the rising flank,
// zero on plateaus and off the footprint, negative on declining edges.
inline double head_contour_flank_angle(const SnapHookProfile& p, double x) {
    const double lr = p.rise_length();
    if (x <= 0.0) return 0.0;
    if (x < lr) return p.joining_angle;

    double past = x - lr;
    if (p.contour == ContourClass::II || p.contour == ContourClass::III) {
        if (past < p.plateau_length) return 0.0;
        past -= p.plateau_length;
    }
    if (p.contour == ContourClass::III) {
        if (past < p.ramp_length) return -std::atan(p.head_height / p.ramp_length);
        return 0.0;
    }
    if (past < p.drop_length()) return -kSharpDropAngle;
    return 0.0;
}

// Mounting of the snap-hook on the terminal, in the terminal frame. The
// undeflected face plane sits the overlap value outside the rail edge when the
// terminal is seated, and the footprint top sits the latch margin below the
// lip underside.
struct HookMount {
    double face_x;      // undeflected face plane
    double top_z;       // top of the head footprint (joins the plain beam face)
    double bottom_z;    // head tip
    double footprint;   // contour footprint length

    static HookMount from(const SnapHookProfile& p, const RailProfile& r) {
        HookMount m;
        m.face_x = -(r.width / 2.0 + p.overlap_value);
        m.top_z = -(r.lip_depth + kLatchMargin);
        m.footprint = p.footprint_length();
        m.bottom_z = m.top_z - m.footprint;
        return m;
    }
};

struct DeflectionMeasurement {
    double deflection = 0.0;  // beam tip deflection required to resolve the overlap
    double arc = 0.0;         // arc position of the edge corner on the head, from the tip
    double gap = 0.0;         // lateral distance from the face plane to the edge corner
    double flank_angle = 0.0; // local contour angle at the contact
    bool on_footprint = false;
};

// Single-ray measurement: the lip's lower edge corner is mapped into the hook
// frame and the required deflection is read off along the beam's lateral
// direction. relative_pose places the terminal in the rail frame.
inline DeflectionMeasurement measure_deflection(const SnapHookProfile& p,
                                                const RailProfile& r,
                                                const PlanarPose& relative_pose) {
    const HookMount m = HookMount::from(p, r);
    const Vec2 corner{-r.width / 2.0, -r.lip_depth};
    const Vec2 local = relative_pose.to_local(corner);

    DeflectionMeasurement out;
    out.arc = local.z - m.bottom_z;
    out.gap = local.x - m.face_x;
    out.on_footprint = out.arc >= 0.0 && out.arc <= m.footprint;

    if (out.arc < 0.0) return out; // edge below the head tip: no material on the ray
    // Above the footprint the surface is the plain beam face (zero protrusion)
    // up to the clamped end.
    if (out.arc > m.footprint + p.beam_length) return out;

    const double surface = out.on_footprint ? head_contour(p, out.arc) : 0.0;
    out.flank_angle = out.on_footprint ? head_contour_flank_angle(p, out.arc) : 0.0;
    out.deflection = std::max(0.0, surface - out.gap);
    return out;
}

inline double deflection_from_pose(const SnapHookProfile& p, const RailProfile& r,
                                   const PlanarPose& relative_pose) {
    return measure_deflection(p, r, relative_pose).deflection;
}

struct MaxDeflection {
    double value = 0.0;
    bool residual = false; // beam cannot rebound fully: permanent deformation
};

// Largest deflection the joining process demands: the apex must clear the
// edge, starting from the seated lateral margin. A negative overlap value
// means the beam stays squeezed after snap-in.
inline MaxDeflection max_deflection(const SnapHookProfile& p, const RailProfile&) {
    return {p.head_height - p.overlap_value, p.overlap_value < 0.0};
}

// True when consecutive overlap samples jump by more than the threshold. With
// positive_only set, only increasing jumps count; a legitimate snap-in
// collapses the overlap quickly, while a tunneling pose change is the only way
// the overlap can appear from nowhere.
inline bool overlap_discontinuity(const std::vector<double>& series, double threshold,
                                  bool positive_only = false) {
    if (series.size() < 2) throw std::invalid_argument("insufficient history");
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double d = series[i] - series[i - 1];
        if (positive_only ? d > threshold : std::abs(d) > threshold) return true;
    }
    return false;
}

// Latched: the edge corner has passed the whole head footprint and the face
// still hangs close enough that the apex reaches under the lip.
inline bool head_latched(const SnapHookProfile& p, const RailProfile& r,
                         const PlanarPose& relative_pose, double min_engagement = 0.3e-3) {
    const DeflectionMeasurement d = measure_deflection(p, r, relative_pose);
    return d.arc >= HookMount::from(p, r).footprint - 1e-6 &&
           d.gap <= p.head_height - min_engagement &&
           d.arc <= HookMount::from(p, r).footprint + p.beam_length;
}

} // namespace snapfit
