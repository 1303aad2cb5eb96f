#pragma once

// Rigid-body joining models: the flexing hook approximated by one sliding or
// one/two rotating rigid segments with lumped mass, spring, and damper, time
// stepped against a unilateral tip contact. Joint kinematics are linearized
// (constant lever arms), so the settled statics reproduce the cantilever
// closed form and the variants differ in their tip inclination, which is what
// separates their joining-force maps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "snapfit/beam.hpp"
#include "snapfit/geometry.hpp"

namespace snapfit {

enum class LumpedVariant { slide, one_hinge, two_hinge };

struct MsdSubmodel {
    double mass = 0.0;      // kg, or kg*m^2 for rotational submodels
    double stiffness = 0.0; // N/m, or N*m/rad
    double damping = 0.0;
    double rest = 0.0;
};

inline double slide_stiffness(const BeamParams& bp, double l) {
    if (!(l > 0.0)) throw std::invalid_argument("invalid beam length");
    return 3.0 * bp.secant_modulus * bp.area_moment / (l * l * l);
}

// Rotational stiffness regularized by a perturbing force epsilon: the torque
// to angle ratio of the equivalent cantilever under that load.
inline double hinge_stiffness(const BeamParams& bp, double l, double epsilon = 1e-7) {
    if (!(l > 0.0)) throw std::invalid_argument("invalid beam length");
    if (!(epsilon > 0.0)) throw std::invalid_argument("invalid regularization force");
    const double f = epsilon / slide_stiffness(bp, l);
    return epsilon * l / std::atan2(f, l);
}

inline double critical_damping(double m, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("invalid stiffness");
    if (!(m >= 0.0)) throw std::invalid_argument("invalid mass");
    return std::sqrt(4.0 * m * k);
}

// n equal springs in series restoring the equivalent stiffness must each be
// n times stiffer.
inline double series_stiffness(std::size_t n, double k_equiv) {
    if (n == 0) throw std::invalid_argument("invalid submodel count");
    if (!(k_equiv > 0.0)) throw std::invalid_argument("invalid stiffness");
    return static_cast<double>(n) * k_equiv;
}

struct LumpedModel {
    LumpedVariant variant = LumpedVariant::one_hinge;
    std::vector<MsdSubmodel> submodels;
    std::vector<double> q;    // generalized positions (m or rad)
    std::vector<double> qd;   // generalized velocities
    std::vector<double> arms; // constant lever from each joint to the tip; 1 for slide
    std::vector<double> segment_lengths;
    double epsilon = 1e-7;
    double contact_stiffness = 0.0;
    // generalized-velocity ceiling; engagement transients of the light beam
    // reach ~1e4, genuine divergence blows past this within a few steps
    double velocity_bound = 1e6;

    double tip_deflection() const {
        double u = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) u += arms[i] * q[i];
        return u;
    }

    double tip_slope() const {
        if (variant == LumpedVariant::slide) return 0.0;
        double s = 0.0;
        for (double v : q) s += v;
        return s;
    }

    double mechanical_energy() const {
        double e = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            e += 0.5 * submodels[i].mass * qd[i] * qd[i];
            e += 0.5 * submodels[i].stiffness * q[i] * q[i];
        }
        return e;
    }
};

inline LumpedModel build(LumpedVariant variant, const SnapHookProfile& p,
                         const BeamParams& bp, double density,
                         double epsilon = 1e-7) {
    if (!(density > 0.0)) throw std::invalid_argument("invalid density");
    LumpedModel m;
    m.variant = variant;
    m.epsilon = epsilon;

    const double l = p.beam_length;
    const double beam_mass = density * l * p.beam_width * p.beam_thickness;
    const double k = slide_stiffness(bp, l);
    m.contact_stiffness = 100.0 * k;

    switch (variant) {
        case LumpedVariant::slide: {
            MsdSubmodel s;
            s.mass = beam_mass;
            s.stiffness = k;
            s.damping = critical_damping(s.mass, s.stiffness);
            m.submodels = {s};
            m.arms = {1.0};
            m.segment_lengths = {l};
            break;
        }
        case LumpedVariant::one_hinge: {
            MsdSubmodel s;
            s.mass = beam_mass * l * l / 3.0; // rod about its end
            s.stiffness = hinge_stiffness(bp, l, epsilon);
            s.damping = critical_damping(s.mass, s.stiffness);
            m.submodels = {s};
            m.arms = {l};
            m.segment_lengths = {l};
            break;
        }
        case LumpedVariant::two_hinge: {
            const double kt = hinge_stiffness(bp, l, epsilon);
            const double half = l / 2.0;
            const double seg_mass = beam_mass / 2.0;

            // Compliance split weighted by the lever arms so the settled tip
            // deflection and tip slope both match the cantilever closed form:
            // the root hinge follows the equal-series rule, the half-arm
            // hinge carries a quarter of that stiffness.
            MsdSubmodel root;
            root.stiffness = series_stiffness(2, kt);
            root.mass = seg_mass * half * half / 3.0 +
                        seg_mass * (0.75 * l * 0.75 * l + half * half / 12.0);
            root.damping = critical_damping(root.mass, root.stiffness);

            MsdSubmodel outer;
            outer.stiffness = series_stiffness(2, kt) / 4.0;
            outer.mass = seg_mass * half * half / 3.0;
            outer.damping = critical_damping(outer.mass, outer.stiffness);

            m.submodels = {root, outer};
            m.arms = {l, half};
            m.segment_lengths = {half, half};
            break;
        }
    }
    m.q.assign(m.submodels.size(), 0.0);
    m.qd.assign(m.submodels.size(), 0.0);
    return m;
}

// One control-rate step of the chain against the unilateral tip constraint.
// deflection_demand is the overlap the tip must resolve; the contact spring
// pushes the tip out until it does. tip_load adds a constant external lateral
// force at the tip (used by the static calibration tests). Internally the
// step subdivides to keep the stiffest mode at omega*dt <= 0.2, contact
// spring included, so integration stays stable for any configured dt.
inline JoiningForces step(LumpedModel& m, double deflection_demand,
                          double contact_angle, double mu0, double dt,
                          double tip_load = 0.0) {
    if (!(dt > 0.0) || dt > 1e-3) throw std::invalid_argument("invalid step size");

    const std::size_t n = m.submodels.size();
    double omega_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double k_proj =
            m.submodels[i].stiffness + m.contact_stiffness * m.arms[i] * m.arms[i];
        omega_max = std::max(omega_max, std::sqrt(k_proj / m.submodels[i].mass));
    }
    const std::size_t sub =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dt * omega_max / 0.2)));
    const double h = dt / static_cast<double>(sub);

    double f_contact = 0.0;
    for (std::size_t step_i = 0; step_i < sub; ++step_i) {
        const double pen = deflection_demand - m.tip_deflection();
        f_contact = pen > 0.0 ? m.contact_stiffness * pen : 0.0;
        const double tip_force = f_contact + tip_load;
        for (std::size_t i = 0; i < n; ++i) {
            const MsdSubmodel& s = m.submodels[i];
            const double tau = m.arms[i] * tip_force - s.stiffness * m.q[i] -
                               s.damping * m.qd[i];
            m.qd[i] += h * tau / s.mass;
            m.q[i] += h * m.qd[i];
            if (!std::isfinite(m.q[i]) || std::abs(m.qd[i]) > m.velocity_bound) {
                std::ostringstream os;
                os << "unstable integration: dt=" << dt
                   << " k=" << s.stiffness << " joint=" << i;
                throw std::runtime_error(os.str());
            }
        }
    }

    JoiningForces out;
    const double pen = deflection_demand - m.tip_deflection();
    out.lateral = pen > 0.0 ? m.contact_stiffness * pen : 0.0;
    out.joining = out.lateral > 0.0
                      ? joining_force(out.lateral, contact_angle, m.tip_slope(), mu0)
                      : 0.0;
    return out;
}

} // namespace snapfit
