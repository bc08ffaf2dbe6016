#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "zulf/sensor.hpp"
#include "zulf/spin_system.hpp"

namespace zulf {

struct CouplingConfig {
  double kappa = 1.0;        // weight of the y-axis field at the cell
  double field_scale = 1e-15;  // tesla per magnetization unit
  bool couple_z = false;     // z lines are computed but not sensed by default
  void validate() const;
};

struct AcquisitionConfig {
  double sample_rate_hz = 2000.0;
  double duration_s = 30.0;
  double t2_s = 3.0;
  enum class Window { none, exp_match };
  Window window = Window::none;
  void validate() const;
  int sample_count() const;
  double decay_rate() const;  // 1/T2, doubled under the matched window
};

struct SensorLine {
  double frequency_hz = 0.0;
  Complex signal{0.0, 0.0};  // coefficient of e^{-i 2 pi nu t}
  std::string bra_label, ket_label;
};

struct SensorLineSet {
  std::vector<SensorLine> lines;
};

using TransferSampler = std::function<Complex(int axis, double frequency_hz)>;

// per line: S_i = H_x(nu_i) b_x,i + H_y(nu_i) kappa b_y,i with b = field_scale * amp
SensorLineSet sensor_signal_lines(const LineSet& lines, const SensorModel& sensor,
                                  const CouplingConfig& coupling);
SensorLineSet sensor_signal_lines(const LineSet& lines, const TransferSampler& transfer,
                                  const CouplingConfig& coupling);

// same signal computed by rotating the detection observables about z by the
// sensor phase (handedness following each coherence) and scaling by the
// sensor amplitude, instead of multiplying phasors by H_zeta
SensorLineSet rotated_observable_signal(const EigenSystem& es, const Matrix& rho0,
                                        const MoleculeSpec& m, const SensorModel& sensor,
                                        const CouplingConfig& coupling,
                                        double merge_width_hz = 1e-6,
                                        double amp_floor_rel = 1e-12);

std::vector<double> synthesize_time_signal(const SensorLineSet& lines,
                                           const AcquisitionConfig& acq);

void add_noise(std::vector<double>& samples, double sigma, std::uint64_t seed);

struct Spectrum {
  std::vector<double> grid_hz;      // strictly increasing
  std::vector<Complex> values;
  std::string provenance;           // "fft" or "analytic"
  std::string config_note;
  double magnitude(std::size_t i) const { return std::abs(values[i]); }
};

Spectrum spectrum_fft(const std::vector<double>& samples, const AcquisitionConfig& acq);

Spectrum analytic_spectrum(const SensorLineSet& lines, const AcquisitionConfig& acq,
                           const std::vector<double>& grid_hz);

std::vector<double> uniform_grid(double lo_hz, double hi_hz, int points);

}  // namespace zulf
