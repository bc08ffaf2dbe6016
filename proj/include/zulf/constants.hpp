#pragma once

namespace zulf::constants {

inline constexpr double pi = 3.14159265358979323846;

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J / K

// nuclear gyromagnetic ratios, rad s^-1 T^-1 (signed)
inline constexpr double gamma_1h = 2.6752218744e8;
inline constexpr double gamma_13c = 6.728284e7;
inline constexpr double gamma_15n = -2.71261804e7;
inline constexpr double gamma_19f = 2.518148e8;
inline constexpr double gamma_31p = 1.08394e8;

// free electron, rad s^-1 T^-1 (magnitude)
inline constexpr double gamma_electron = 1.760859630e11;

} // namespace zulf::constants
