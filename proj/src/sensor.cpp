#include "zulf/sensor.hpp"

#include <cmath>
#include <stdexcept>

namespace zulf {

void SensorModel::validate() const {
  if (!(gamma_relax > 0.0))
    throw std::invalid_argument("sensor relaxation rate must be > 0");
  if (!(p0 > 0.0 && p0 <= 1.0))
    throw std::invalid_argument("equilibrium polarization must be in (0, 1]");
  if (!(gamma_eff > 0.0))
    throw std::invalid_argument("effective gyromagnetic ratio must be > 0");
  if (!std::isfinite(light_shift_tesla) || !std::isfinite(bias_bz_tesla))
    throw std::invalid_argument("sensor fields must be finite");
}

std::complex<double> SensorModel::transfer(int axis, double frequency_hz) const {
  validate();
  if (frequency_hz < 0.0)
    throw std::invalid_argument("transfer function is defined for nu >= 0");
  const std::complex<double> a{gamma_relax,
                               -2.0 * constants::pi * frequency_hz};
  const double b = gamma_eff * effective_field_tesla();
  const std::complex<double> denom = a * a + b * b;  // never zero for Gamma > 0
  switch (axis) {
    case 0: return gamma_eff * p0 * b / denom;
    case 1: return -gamma_eff * p0 * a / denom;
    case 2: return {0.0, 0.0};  // pump-axis drive has no first-order response
    default: throw std::invalid_argument("sensor axis must be x (0), y (1) or z (2)");
  }
}

double SensorModel::amplitude(int axis, double frequency_hz) const {
  return std::abs(transfer(axis, frequency_hz));
}

double SensorModel::phase(int axis, double frequency_hz) const {
  return std::arg(transfer(axis, frequency_hz));
}

double SensorModel::magic_field_tesla() const {
  validate();
  const double b_magic = -light_shift_tesla;
  SensorModel at_magic = *this;
  at_magic.bias_bz_tesla = b_magic;
  for (int i = 0; i <= 50; ++i) {
    const double nu = 1.0 + 10.0 * i;  // 1..501 Hz
    if (at_magic.amplitude(0, nu) >= 1e-15 * at_magic.amplitude(1, nu))
      throw std::logic_error("x response failed to vanish at the magic field");
  }
  return b_magic;
}

}  // namespace zulf
