#pragma once

#include "gravidec/background.hpp"
#include "gravidec/constants.hpp"
#include "gravidec/geometry.hpp"

// Named instrument presets.  "hyper-cs": the HYPER-class cesium instrument,
// pinned to m = 2e-25 kg, v_atom = 0.2 m/s, tau_ab = 1.5 s, sin(2 alpha) =
// 0.035, Omega_phot = 2e15 rad/s, tau_mb = 1e-9 s, tau_lm = 3e-9 s, flat
// binary-confusion background S_h = 1e-34 Hz^-1 over 1-100 uHz, averaging
// time 86400 s.

namespace gravidec::presets {

inline RhombGeometry hyper_cs_rhomb() {
  return RhombGeometry::from_transverse_kick(0.035, 0.2, 1.5, 2e-25);
}

inline RamanOptics hyper_cs_optics() { return RamanOptics::make(2e15, 1e-9, 3e-9, 2e-25); }

inline GwBackground hyper_cs_background() {
  return GwBackground::flat(1e-34, {constants::two_pi * 1e-6, constants::two_pi * 1e-4});
}

inline double hyper_cs_tau_av() { return 86400.0; }  // s

}  // namespace gravidec::presets
