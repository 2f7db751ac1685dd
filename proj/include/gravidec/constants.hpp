#pragma once

// Physical constants pinned to fixed values so that every output of the
// library is bit-reproducible.  CODATA 2018 exact/recommended values.

namespace gravidec::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double c_light = 299792458.0;         // m/s (exact)
inline constexpr double newton_g = 6.67430e-11;        // m^3 kg^-1 s^-2
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J/K (exact)

}  // namespace gravidec::constants
