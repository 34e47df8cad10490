#pragma once

#include <numbers>

namespace mwthermo::constants {

inline constexpr double hbar = 1.054571817e-34; // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J / K
inline constexpr double two_pi = 2.0 * std::numbers::pi;

} // namespace mwthermo::constants

namespace mwthermo {

inline constexpr double hz_to_angular(double f_hz) { return constants::two_pi * f_hz; }
inline constexpr double angular_to_hz(double omega) { return omega / constants::two_pi; }

} // namespace mwthermo
