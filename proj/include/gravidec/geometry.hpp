#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "gravidec/constants.hpp"
#include "gravidec/linalg.hpp"

// Interferometer configuration: the rhomb Mach-Zehnder (split at A, mirrors
// at B and C, recombination at D) and the Raman beam-splitter optics.
//
// The rhomb lies in the (x1, x3) plane, symmetric about the origin:
//   t_D = tau_ab, x_D = (l_ab cos(alpha), 0, 0),  A = -D (both t and x),
//   t_B = 0,      x_B = (0, 0, l_ab sin(alpha)),  C = -B,
// with l_ab = v_atom * tau_ab.  Laser beams propagate along x3.

namespace gravidec {

struct SpacetimeEvent {
  double t = 0.0;  // s
  Vec3 x{};        // m
};

enum class Apex { A, B, C, D };
enum class Segment { AB, BD, AC, CD };

class RhombGeometry {
 public:
  static RhombGeometry make(double alpha, double v_atom, double tau_ab, double mass) {
    if (!(alpha > 0.0) || !(2.0 * alpha < 0.5 * constants::pi))
      throw std::invalid_argument("RhombGeometry: alpha out of range (need 0 < 2*alpha < pi/2)");
    if (!(v_atom > 0.0) || !(v_atom < 1e-3 * constants::c_light))
      throw std::invalid_argument("RhombGeometry: v_atom out of range (need 0 < v_atom < 1e-3 c)");
    if (!(tau_ab > 0.0)) throw std::invalid_argument("RhombGeometry: tau_ab must be > 0");
    if (!(mass > 0.0)) throw std::invalid_argument("RhombGeometry: mass must be > 0");
    RhombGeometry g;
    g.alpha_ = alpha;
    g.v_atom_ = v_atom;
    g.tau_ab_ = tau_ab;
    g.mass_ = mass;
    return g;
  }

  // The aperture fixed by the Raman velocity kick: alpha = arcsin(ratio)/2.
  static RhombGeometry from_transverse_kick(double sin_two_alpha, double v_atom, double tau_ab,
                                            double mass) {
    if (!(sin_two_alpha > 0.0) || !(sin_two_alpha < 1.0))
      throw std::invalid_argument("RhombGeometry: sin_two_alpha out of range (0, 1)");
    return make(0.5 * std::asin(sin_two_alpha), v_atom, tau_ab, mass);
  }

  double alpha() const { return alpha_; }
  double v_atom() const { return v_atom_; }
  double tau_ab() const { return tau_ab_; }
  double mass() const { return mass_; }
  double sin_two_alpha() const { return std::sin(2.0 * alpha_); }
  double side_length() const { return v_atom_ * tau_ab_; }  // l_ab, m

  // Atomic kinetic energy measured as an angular frequency: m v^2 / (2 hbar).
  double omega_atomic() const { return mass_ * v_atom_ * v_atom_ / (2.0 * constants::hbar); }

  SpacetimeEvent apex_event(Apex a) const { return apex_scaled(a, side_length()); }

  // Reduced velocity u = v/c along a segment (dimensionless).
  Vec3 reduced_velocity(Segment s) const {
    const double u = v_atom_ / constants::c_light;
    const double ca = std::cos(alpha_), sa = std::sin(alpha_);
    switch (s) {
      case Segment::AB:
      case Segment::CD:
        return {u * ca, 0.0, u * sa};
      case Segment::BD:
      case Segment::AC:
        return {u * ca, 0.0, -u * sa};
    }
    return {};
  }

  // Apexes of the wavefront pattern used for the gravitational-mode phase at
  // the recombination events: the rhomb with its side mapped to the light
  // travel distance c*tau_ab.  Phase-time differences then vanish exactly for
  // modes propagating along a side; for slow atoms the difference from the
  // physical apex positions is O(v_atom/c).
  SpacetimeEvent wavefront_apex_event(Apex a) const {
    return apex_scaled(a, constants::c_light * tau_ab_);
  }

  // Phase time eta = t - n.x/c of the wavefront apex for mode direction n.
  double wavefront_phase_time(Apex a, const Vec3& n) const {
    const SpacetimeEvent ev = wavefront_apex_event(a);
    return ev.t - n.dot(ev.x) / constants::c_light;
  }

 private:
  SpacetimeEvent apex_scaled(Apex a, double side) const {
    const double ca = std::cos(alpha_), sa = std::sin(alpha_);
    switch (a) {
      case Apex::D:
        return {tau_ab_, {side * ca, 0.0, 0.0}};
      case Apex::A:
        return {-tau_ab_, {-side * ca, 0.0, 0.0}};
      case Apex::B:
        return {0.0, {0.0, 0.0, side * sa}};
      case Apex::C:
        return {0.0, {0.0, 0.0, -side * sa}};
    }
    return {};
  }

  double alpha_ = 0.0, v_atom_ = 0.0, tau_ab_ = 0.0, mass_ = 0.0;
};

// Raman beam-splitter optics.  At each apex the two counter-propagating
// beams run along x3: one from laser L' directly up to the atom, one from
// laser L up to the mirror M and back down.  Relative to the apex event
// (t, x):
//   M  : t - tau_mb,            x3 + c tau_mb
//   L  : t - (tau_mb + tau_lm), x3 - c (tau_lm - tau_mb)
//   L' : t - (tau_lm - tau_mb), x3 - c (tau_lm - tau_mb)
// The geometry is identical at all four apexes.
class RamanOptics {
 public:
  static RamanOptics make(double omega_phot, double tau_mb, double tau_lm, double mass) {
    if (!(omega_phot > 0.0)) throw std::invalid_argument("RamanOptics: omega_phot must be > 0");
    if (!(tau_mb > 0.0)) throw std::invalid_argument("RamanOptics: tau_mb must be > 0");
    if (!(tau_lm > 0.0)) throw std::invalid_argument("RamanOptics: tau_lm must be > 0");
    if (!(mass > 0.0)) throw std::invalid_argument("RamanOptics: mass must be > 0");
    RamanOptics o;
    o.omega_phot_ = omega_phot;
    o.tau_mb_ = tau_mb;
    o.tau_lm_ = tau_lm;
    o.mass_ = mass;
    return o;
  }

  double omega_phot() const { return omega_phot_; }  // rad/s
  double tau_mb() const { return tau_mb_; }          // mirror -> atom, s
  double tau_lm() const { return tau_lm_; }          // laser -> mirror, s
  double mass() const { return mass_; }

  // Transverse velocity transferred by the two-photon kick.
  double v_trans() const { return 2.0 * constants::hbar * omega_phot_ / (mass_ * constants::c_light); }

  double x_ratio() const { return tau_lm_ / tau_mb_; }  // x = tau_lm / tau_mb

  SpacetimeEvent mirror_event(const SpacetimeEvent& apex) const {
    SpacetimeEvent e = apex;
    e.t -= tau_mb_;
    e.x.z += constants::c_light * tau_mb_;
    return e;
  }

  SpacetimeEvent laser_event(const SpacetimeEvent& apex) const {
    SpacetimeEvent e = apex;
    e.t -= tau_mb_ + tau_lm_;
    e.x.z -= constants::c_light * (tau_lm_ - tau_mb_);
    return e;
  }

  SpacetimeEvent laser_prime_event(const SpacetimeEvent& apex) const {
    SpacetimeEvent e = apex;
    e.t -= tau_lm_ - tau_mb_;
    e.x.z -= constants::c_light * (tau_lm_ - tau_mb_);
    return e;
  }

 private:
  double omega_phot_ = 0.0, tau_mb_ = 0.0, tau_lm_ = 0.0, mass_ = 0.0;
};

// A consistent instrument ties the rhomb aperture to the Raman kick:
// sin(2 alpha) = v_trans / v_atom.  Throws if they disagree by more than
// `tolerance` (relative).
inline void check_instrument_consistency(const RhombGeometry& g, const RamanOptics& o,
                                         double tolerance = 0.02) {
  const double expected = o.v_trans() / g.v_atom();
  const double got = g.sin_two_alpha();
  if (std::abs(got - expected) > tolerance * expected)
    throw std::invalid_argument(
        "inconsistent instrument: sin(2 alpha) = " + std::to_string(got) +
        " but v_trans/v_atom = " + std::to_string(expected));
}

}  // namespace gravidec
