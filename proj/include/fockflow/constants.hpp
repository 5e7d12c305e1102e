#pragma once

namespace fockflow::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double c_light = 299792458.0;          // m/s (exact)
inline constexpr double k_boltzmann = 1.380649e-23;     // J/K (exact)
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double electron_mass = 9.1093837015e-31;      // kg
inline constexpr double elementary_charge = 1.602176634e-19;   // C (exact)
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double atmosphere_pa = 101325.0;       // Pa per atm (exact)

// classical electron radius, e^2 / (4 pi eps0 m_e c^2)
inline constexpr double electron_radius =
    elementary_charge * elementary_charge /
    (2.0 * two_pi * vacuum_permittivity * electron_mass * c_light * c_light);

}  // namespace fockflow::constants
