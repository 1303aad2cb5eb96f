#pragma once

// Analytical cantilever joining model: deflection state in, lateral and
// joining forces out. The pipeline is measure overlap -> bending force ->
// inclination -> friction-cone mapping at the contact flank.

#include <cmath>
#include <stdexcept>

#include "snapfit/geometry.hpp"

namespace snapfit {

// How the effective bending length follows the joining progress. The default
// keeps the load point fixed at the head top; contact_point extends the lever
// to the (rigid) head contact, a calibration alternative.
enum class LengthMode { constant, contact_point };

struct BeamParams {
    double secant_modulus = 1.2e9; // polymer secant modulus, Pa
    double area_moment = 0.0;      // I_y of the bending cross-section, m^4
    double friction = 0.2;         // contact friction coefficient mu0
    LengthMode length_mode = LengthMode::constant;
};

struct JoiningForces {
    double lateral = 0.0; // F_Q, deflects the beam
    double joining = 0.0; // F_J, felt along the joining direction
};

inline double area_moment(double b, double h) {
    if (!(b > 0.0) || !(h > 0.0)) throw std::invalid_argument("invalid cross-section");
    return b * h * h * h / 12.0;
}

inline BeamParams beam_params_for(const SnapHookProfile& p,
                                  double secant_modulus = 1.2e9,
                                  double friction = 0.2) {
    BeamParams bp;
    bp.secant_modulus = secant_modulus;
    bp.area_moment = area_moment(p.beam_width, p.beam_thickness);
    bp.friction = friction;
    return bp;
}

// Tip force producing deflection f on a clamped cantilever of length l_eff.
// The corrected variant halves the stiffness, compensating the rigid-beam
// overestimate observed against physical hooks.
inline double lateral_force(double f, double l_eff, const BeamParams& bp,
                            bool corrected) {
    if (!(l_eff > 0.0)) throw std::invalid_argument("invalid effective length");
    if (!(f >= 0.0)) throw std::invalid_argument("negative deflection");
    const double fq =
        3.0 * bp.secant_modulus * bp.area_moment * f / (l_eff * l_eff * l_eff);
    return corrected ? 0.5 * fq : fq;
}

// Beam end slope under the tip load that produces deflection f.
inline double inclination_angle(double f, double l_eff) {
    if (!(l_eff > 0.0)) throw std::invalid_argument("invalid effective length");
    if (!(f >= 0.0)) throw std::invalid_argument("negative deflection");
    return 3.0 * f / (2.0 * l_eff);
}

// Friction-cone mapping at the contact ramp. alpha is the local flank angle,
// gamma the beam inclination; their sum is the effective contact angle. A
// negative flank (declining edge) yields a negative, pulling joining force.
inline double joining_force(double f_q, double alpha, double gamma, double mu0) {
    const double t = std::tan(alpha + gamma);
    const double den = 1.0 - mu0 * t;
    if (!(den > 0.0)) throw std::domain_error("self-locking regime");
    return f_q * (mu0 + t) / den;
}

inline double effective_length(const SnapHookProfile& p, LengthMode mode, double arc) {
    if (mode == LengthMode::constant) return p.beam_length;
    const double fp = p.footprint_length();
    return p.beam_length + (fp - std::min(std::max(arc, 0.0), fp));
}

// Full analytic model at a relative pose. Past snap-in the measurement falls
// onto the plain face, so a positive seating margin yields (0, 0) and a
// negative one holds the residual squeeze force automatically.
inline JoiningForces analytic_wrench(const SnapHookProfile& p, const RailProfile& r,
                                     const BeamParams& bp, const PlanarPose& pose,
                                     bool corrected) {
    const DeflectionMeasurement d = measure_deflection(p, r, pose);
    JoiningForces out;
    if (d.deflection <= 0.0) return out;

    const double l_eff = effective_length(p, bp.length_mode, d.arc);
    out.lateral = lateral_force(d.deflection, l_eff, bp, corrected);
    const double gamma = inclination_angle(d.deflection, l_eff);
    out.joining = joining_force(out.lateral, d.flank_angle, gamma, bp.friction);
    return out;
}

} // namespace snapfit
