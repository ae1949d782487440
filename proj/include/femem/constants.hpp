#pragma once

namespace femem::constants {

inline constexpr double q = 1.602176634e-19;         // elementary charge, C
inline constexpr double k_b = 1.380649e-23;          // Boltzmann constant, J/K
inline constexpr double eps0 = 8.8541878128e-12;     // vacuum permittivity, F/m
inline constexpr double h = 6.62607015e-34;          // Planck constant, J s
inline constexpr double m_e = 9.1093837015e-31;      // electron rest mass, kg
inline constexpr double pi = 3.14159265358979323846;

inline constexpr double ev_to_joule(double ev) { return ev * q; }
inline constexpr double joule_to_ev(double j) { return j / q; }

}  // namespace femem::constants
