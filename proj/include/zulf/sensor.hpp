#pragma once

#include <complex>

#include "zulf/constants.hpp"

namespace zulf {

// linearized single-relaxation Bloch model of the alkali magnetometer:
// with a = Gamma - i w and b = gamma_eff * B'_z, the probe (x) reading per
// unit drive at angular frequency w (time convention e^{-iwt}) is
//   H_y = -gamma_eff * P0 * a / (a^2 + b^2)
//   H_x = +gamma_eff * P0 * b / (a^2 + b^2)
struct SensorModel {
  double gamma_eff = constants::gamma_electron / 6.0;  // rad s^-1 T^-1
  double gamma_relax = 2.0 * constants::pi * 50.0;     // s^-1
  double p0 = 0.5;
  double light_shift_tesla = 0.0;
  double bias_bz_tesla = 0.0;

  void validate() const;  // throws std::invalid_argument
  double effective_field_tesla() const { return bias_bz_tesla + light_shift_tesla; }

  std::complex<double> transfer(int axis, double frequency_hz) const;  // axis 0=x, 1=y
  double amplitude(int axis, double frequency_hz) const;
  double phase(int axis, double frequency_hz) const;

  // bias that cancels the light shift; verifies the x channel vanishes there
  double magic_field_tesla() const;
};

}  // namespace zulf
