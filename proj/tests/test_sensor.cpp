#include <cmath>
#include <complex>

#include "doctest.h"
#include "zulf/constants.hpp"
#include "zulf/sensor.hpp"

using namespace zulf;
using doctest::Approx;

namespace {

SensorModel sensor_with_field(double beff_tesla) {
  SensorModel s;
  s.bias_bz_tesla = beff_tesla;
  return s;
}

}  // namespace

TEST_SUITE("sensor") {

TEST_CASE("effective field is the sum of bias and light shift") {
  SensorModel s;
  s.bias_bz_tesla = 43.7e-9;
  s.light_shift_tesla = -43.7e-9;
  CHECK(s.effective_field_tesla() == Approx(0.0).scale(1e-9));
  s.bias_bz_tesla = -146e-9;
  CHECK(s.effective_field_tesla() == Approx(-189.7e-9).epsilon(1e-12));
  s.light_shift_tesla = 0.0;
  CHECK(s.effective_field_tesla() == Approx(-146e-9).epsilon(1e-12));
}

TEST_CASE("x channel vanishes identically at zero effective field") {
  SensorModel s = sensor_with_field(0.0);
  for (double nu : {0.0, 0.5, 22.0, 222.2, 1234.5}) {
    CHECK(std::abs(s.transfer(0, nu)) == 0.0);
    CHECK(std::abs(s.transfer(1, nu)) > 0.0);
  }
}

TEST_CASE("dc limit and monotone rolloff of the y channel") {
  SensorModel s = sensor_with_field(0.0);
  const std::complex<double> dc = s.transfer(1, 0.0);
  CHECK(std::real(dc) == Approx(-s.gamma_eff * s.p0 / s.gamma_relax).epsilon(1e-14));
  CHECK(std::imag(dc) == Approx(0.0));
  double prev = std::abs(dc);
  for (double nu = 10.0; nu <= 10000.0; nu *= 1.5) {
    const double cur = s.amplitude(1, nu);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-2 * std::abs(dc));  // high-frequency rolloff
}

TEST_CASE("y magnitude peaks near the Larmor frequency of the effective field") {
  SensorModel s;
  const double beff = 10.0 * s.gamma_relax / s.gamma_eff;  // gamma_eff B / Gamma = 10
  s.bias_bz_tesla = beff;
  const double nu_larmor = s.gamma_eff * beff / (2.0 * constants::pi);
  double best_nu = 0.0, best = 0.0;
  for (double nu = 0.0; nu <= 3.0 * nu_larmor; nu += nu_larmor / 2000.0) {
    const double a = s.amplitude(1, nu);
    if (a > best) {
      best = a;
      best_nu = nu;
    }
  }
  CHECK(std::abs(best_nu - nu_larmor) < 0.05 * nu_larmor);
}

TEST_CASE("reality constraint: H(-w) equals the conjugate of H(w)") {
  // evaluate the closed form at negative angular frequency directly
  SensorModel s = sensor_with_field(30e-9);
  for (double nu : {3.0, 60.0, 222.2}) {
    for (int axis : {0, 1}) {
      const std::complex<double> a_neg{s.gamma_relax, 2.0 * constants::pi * nu};
      const double b = s.gamma_eff * s.effective_field_tesla();
      const std::complex<double> denom = a_neg * a_neg + b * b;
      const std::complex<double> h_neg =
          axis == 0 ? s.gamma_eff * s.p0 * b / denom
                    : -s.gamma_eff * s.p0 * a_neg / denom;
      CHECK(std::abs(h_neg - std::conj(s.transfer(axis, nu))) <
            1e-15 * std::abs(h_neg));
    }
  }
}

TEST_CASE("parity in the effective field: H_x odd, H_y even") {
  for (double beff : {5e-9, 43.7e-9, 150e-9}) {
    SensorModel plus = sensor_with_field(beff);
    SensorModel minus = sensor_with_field(-beff);
    for (double nu : {1.0, 100.0, 222.2, 900.0}) {
      CHECK(std::abs(plus.transfer(0, nu) + minus.transfer(0, nu)) <
            1e-15 * std::abs(plus.transfer(0, nu)));
      CHECK(std::abs(plus.transfer(1, nu) - minus.transfer(1, nu)) <
            1e-15 * std::abs(plus.transfer(1, nu)));
    }
  }
}

TEST_CASE("phase difference between channels stays in its quarter plane") {
  for (double beff : {2e-9, 20e-9, 80e-9, 200e-9}) {
    for (double nu = 0.5; nu < 1500.0; nu *= 1.7) {
      SensorModel pos = sensor_with_field(beff);
      double d = pos.phase(0, nu) - pos.phase(1, nu);
      while (d > constants::pi) d -= 2.0 * constants::pi;
      while (d < -constants::pi) d += 2.0 * constants::pi;
      CHECK(d > -constants::pi);
      CHECK(d < -constants::pi / 2);

      SensorModel neg = sensor_with_field(-beff);
      d = neg.phase(0, nu) - neg.phase(1, nu);
      while (d > constants::pi) d -= 2.0 * constants::pi;
      while (d < -constants::pi) d += 2.0 * constants::pi;
      CHECK(d > 0.0);
      CHECK(d < constants::pi / 2);
    }
  }
}

TEST_CASE("magic field cancels the light shift and silences the x channel") {
  SensorModel s;
  s.light_shift_tesla = -43.7e-9;
  CHECK(s.magic_field_tesla() == Approx(43.7e-9).epsilon(1e-15));
  s.light_shift_tesla = 0.0;
  CHECK(s.magic_field_tesla() == Approx(0.0));
  // alpha * power form of the light shift
  const double alpha = -0.5e-9, power = 20.0;
  s.light_shift_tesla = alpha * power;
  CHECK(s.magic_field_tesla() == Approx(10e-9).epsilon(1e-15));
}

TEST_CASE("validation rejects unphysical sensors") {
  SensorModel s;
  s.gamma_relax = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SensorModel{};
  s.p0 = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SensorModel{};
  s.gamma_eff = -1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SensorModel{};
  CHECK_THROWS_AS(s.transfer(0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(s.transfer(3, 1.0), std::invalid_argument);
  CHECK(std::abs(s.transfer(2, 100.0)) == 0.0);  // pump axis is silent
}

}  // TEST_SUITE
