#pragma once

#include <numbers>

// CODATA 2018 recommended values, SI units.
namespace fastdeco::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;            // J s
inline constexpr double boltzmann = 1.380649e-23;          // J / K
inline constexpr double speed_of_light = 299792458.0;      // m / s
inline constexpr double fine_structure = 7.2973525693e-3;  // dimensionless
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double electron_mass = 9.1093837015e-31;     // kg
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double electron_volt = elementary_charge;    // J
inline constexpr double mega_electron_volt = 1e6 * electron_volt;

// Alpha particle rest energy in MeV.
inline constexpr double alpha_particle_mass_mev = 3727.3794066;

// Mass in kg of a particle with rest energy `mev` MeV.
constexpr double mass_from_mev(double mev) {
  return mev * mega_electron_volt / (speed_of_light * speed_of_light);
}

}  // namespace fastdeco::constants
