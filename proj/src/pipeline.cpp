#include "zulf/pipeline.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "zulf/constants.hpp"

namespace zulf {

void CouplingConfig::validate() const {
  if (!std::isfinite(kappa)) throw std::invalid_argument("kappa must be finite");
  if (!(field_scale > 0.0) || !std::isfinite(field_scale))
    throw std::invalid_argument("field_scale must be positive");
}

void AcquisitionConfig::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw std::invalid_argument("sample_rate_hz must be positive");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw std::invalid_argument("duration_s must be positive");
  if (!(t2_s > 0.0) || !std::isfinite(t2_s))
    throw std::invalid_argument("t2_s must be positive");
}

int AcquisitionConfig::sample_count() const {
  return static_cast<int>(std::llround(duration_s * sample_rate_hz));
}

double AcquisitionConfig::decay_rate() const {
  const double r = 1.0 / t2_s;
  return window == Window::exp_match ? 2.0 * r : r;
}

SensorLineSet sensor_signal_lines(const LineSet& lines, const TransferSampler& transfer,
                                  const CouplingConfig& coupling) {
  coupling.validate();
  SensorLineSet out;
  out.lines.reserve(lines.lines.size());
  for (const auto& l : lines.lines) {
    const double nu = l.frequency_hz;
    Complex s = transfer(0, nu) * (coupling.field_scale * l.amp_x) +
                coupling.kappa * transfer(1, nu) * (coupling.field_scale * l.amp_y);
    if (coupling.couple_z) s += transfer(2, nu) * (coupling.field_scale * l.amp_z);
    out.lines.push_back({nu, s, l.bra_label, l.ket_label});
  }
  return out;
}

SensorLineSet sensor_signal_lines(const LineSet& lines, const SensorModel& sensor,
                                  const CouplingConfig& coupling) {
  sensor.validate();
  return sensor_signal_lines(
      lines, [&sensor](int axis, double f) { return sensor.transfer(axis, f); },
      coupling);
}

SensorLineSet rotated_observable_signal(const EigenSystem& es, const Matrix& rho0,
                                        const MoleculeSpec& m, const SensorModel& sensor,
                                        const CouplingConfig& coupling,
                                        double merge_width_hz, double amp_floor_rel) {
  coupling.validate();
  sensor.validate();
  const int d = es.dimension();
  if (rho0.rows() != d || rho0.cols() != d)
    throw std::invalid_argument("density matrix dimension does not match eigensystem");

  // refine eigenvectors so f_z is diagonal inside each degenerate manifold
  const int n = m.size();
  Matrix fz = total_spin(n, 2);
  Matrix u = es.eigenvectors;
  const double tol_rad = 2.0 * constants::pi * merge_width_hz;
  for (auto [s, e] : degenerate_index_groups(es.eigenvalues, tol_rad)) {
    const int g = e - s;
    if (g < 2) continue;
    Matrix block = u.middleCols(s, g).adjoint() * fz * u.middleCols(s, g);
    Eigen::SelfAdjointEigenSolver<Matrix> solver((block + block.adjoint()) / 2.0);
    u.middleCols(s, g) = u.middleCols(s, g) * solver.eigenvectors();
  }
  Matrix fz_e = u.adjoint() * fz * u;
  Eigen::VectorXd mz(d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b)
      if (a != b && std::abs(fz_e(a, b)) > 1e-8)
        throw std::domain_error("observable rotation needs f_z conserved (axial field)");
    const double v = std::real(fz_e(a, a));
    if (std::abs(v - std::round(2.0 * v) / 2.0) > 1e-6)
      throw std::domain_error("observable rotation needs half-integer magnetic numbers");
    mz[a] = std::round(2.0 * v) / 2.0;
  }

  Matrix rho_e = u.adjoint() * rho0 * u;
  Matrix ox = u.adjoint() * weighted_spin(m, 0) * u;
  Matrix oy = u.adjoint() * weighted_spin(m, 1) * u;
  Matrix oz = u.adjoint() * weighted_spin(m, 2) * u;

  struct Pair {
    double freq;
    Complex ax, ay, az;
    int a, b;
  };
  std::vector<Pair> pairs;
  double max_pair_amp = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < a; ++b) {
      const double freq =
          (es.eigenvalues[a] - es.eigenvalues[b]) / (2.0 * constants::pi);
      if (freq < merge_width_hz) continue;
      const Complex ax = rho_e(a, b) * ox(b, a);
      const Complex ay = rho_e(a, b) * oy(b, a);
      const Complex az = rho_e(a, b) * oz(b, a);
      pairs.push_back({freq, ax, ay, az, a, b});
      max_pair_amp =
          std::max({max_pair_amp, std::abs(ax), std::abs(ay), std::abs(az)});
    }
  std::erase_if(pairs, [&](const Pair& p) {
    const double cut = 1e-14 * max_pair_amp;
    return std::abs(p.ax) < cut && std::abs(p.ay) < cut && std::abs(p.az) < cut;
  });
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& l, const Pair& r) { return l.freq < r.freq; });

  auto label_of = [&](int idx) {
    return es.labeled() ? es.labels[idx].text() : "#" + std::to_string(idx);
  };
  auto join = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "+") + s;
    return out;
  };

  // per cluster: rotate each detection observable about z by the sensor phase,
  // with the rotation handedness following each coherence's delta m, then read
  // the coherence matrix element of the rotated operator and scale by |H|
  SensorLineSet out;
  struct Merged {
    SensorLine line;
    double mag;  // magnetization amplitude used for the relative floor
  };
  std::vector<Merged> merged;
  double max_mag = 0.0;
  size_t i = 0;
  while (i < pairs.size()) {
    size_t j = i + 1;
    while (j < pairs.size() && pairs[j].freq - pairs[j - 1].freq <= merge_width_hz)
      ++j;
    double fsum = 0.0;
    for (size_t p = i; p < j; ++p) fsum += pairs[p].freq;
    const double nu = fsum / static_cast<double>(j - i);

    const Complex hx = sensor.transfer(0, nu);
    const Complex hy = sensor.transfer(1, nu);
    const double phase_x = std::arg(hx), phase_y = std::arg(hy);
    const double gain_x = std::abs(hx), gain_y = std::abs(hy);

    Complex signal{0.0, 0.0};
    Complex sum_x{0.0, 0.0}, sum_y{0.0, 0.0}, sum_z{0.0, 0.0};
    std::vector<std::string> bras, kets;
    for (size_t p = i; p < j; ++p) {
      const int a = pairs[p].a, b = pairs[p].b;
      const double dm_raw = mz[a] - mz[b];
      const double dm = std::round(dm_raw);
      if (std::abs(dm_raw - dm) > 1e-6)
        throw std::domain_error("coherence without integer delta m");
      for (int axis = 0; axis < 2; ++axis) {
        const Matrix& obs = axis == 0 ? ox : oy;
        const double phi = axis == 0 ? phase_x : phase_y;
        const double gain = axis == 0 ? gain_x : gain_y;
        const double weight = axis == 0 ? 1.0 : coupling.kappa;
        Matrix rot = Matrix::Zero(d, d);
        for (int k = 0; k < d; ++k)
          rot(k, k) = std::polar(1.0, -dm * phi * mz[k]);
        Matrix turned = rot * obs * rot.adjoint();
        signal += weight * gain * coupling.field_scale * rho_e(a, b) * turned(b, a);
      }
      // the pump-axis channel never reaches the output; tracked only so the
      // line membership matches the transfer-function path exactly
      sum_x += pairs[p].ax;
      sum_y += pairs[p].ay;
      sum_z += pairs[p].az;
      bras.push_back(label_of(a));
      kets.push_back(label_of(b));
    }
    const double mag =
        std::max({std::abs(sum_x), std::abs(sum_y), std::abs(sum_z)});
    max_mag = std::max(max_mag, mag);
    merged.push_back({{nu, signal, join(bras), join(kets)}, mag});
    i = j;
  }
  const double floor = amp_floor_rel * max_mag;
  for (auto& mg : merged)
    if (mg.mag >= floor) out.lines.push_back(std::move(mg.line));
  return out;
}

std::vector<double> synthesize_time_signal(const SensorLineSet& lines,
                                           const AcquisitionConfig& acq) {
  acq.validate();
  for (const auto& l : lines.lines)
    if (2.0 * l.frequency_hz >= acq.sample_rate_hz)
      throw std::invalid_argument("sample rate below Nyquist for line at " +
                                  std::to_string(l.frequency_hz) + " Hz");
  const int count = acq.sample_count();
  const double dt = 1.0 / acq.sample_rate_hz;
  const double r = 1.0 / acq.t2_s;  // physical decay; windows apply later
  std::vector<double> samples(static_cast<size_t>(count), 0.0);
  for (const auto& l : lines.lines) {
    const double w = 2.0 * constants::pi * l.frequency_hz;
    for (int k = 0; k < count; ++k) {
      const double t = k * dt;
      samples[static_cast<size_t>(k)] +=
          2.0 * std::real(l.signal * std::polar(1.0, -w * t)) * std::exp(-r * t);
    }
  }
  return samples;
}

void add_noise(std::vector<double>& samples, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("noise sigma must be non-negative");
  if (sigma == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& s : samples) s += dist(rng);
}

Spectrum spectrum_fft(const std::vector<double>& samples,
                      const AcquisitionConfig& acq) {
  acq.validate();
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw std::invalid_argument("need at least two samples");
  const double dt = 1.0 / acq.sample_rate_hz;
  std::vector<double> in(samples);
  if (acq.window == AcquisitionConfig::Window::exp_match) {
    const double r = 1.0 / acq.t2_s;
    for (int k = 0; k < n; ++k) in[static_cast<size_t>(k)] *= std::exp(-r * k * dt);
  }
  std::vector<fftw_complex> raw(static_cast<size_t>(n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), raw.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  Spectrum sp;
  sp.provenance = "fft";
  sp.config_note = acq.window == AcquisitionConfig::Window::exp_match
                       ? "window=exp_match"
                       : "window=none";
  sp.grid_hz.reserve(raw.size());
  sp.values.reserve(raw.size());
  for (size_t k = 0; k < raw.size(); ++k) {
    sp.grid_hz.push_back(static_cast<double>(k) * acq.sample_rate_hz / n);
    // bins carry the e^{+i 2 pi f t} component; conjugate back to the
    // e^{-i 2 pi nu t} line convention and normalize to spectral density
    sp.values.push_back(Complex(raw[k][0], -raw[k][1]) * dt);
  }
  return sp;
}

Spectrum analytic_spectrum(const SensorLineSet& lines, const AcquisitionConfig& acq,
                           const std::vector<double>& grid_hz) {
  acq.validate();
  const double r = acq.decay_rate();
  const Complex itwopi(0.0, 2.0 * constants::pi);
  Spectrum sp;
  sp.provenance = "analytic";
  sp.config_note = acq.window == AcquisitionConfig::Window::exp_match
                       ? "window=exp_match"
                       : "window=none";
  sp.grid_hz = grid_hz;
  sp.values.reserve(grid_hz.size());
  for (double f : grid_hz) {
    Complex v{0.0, 0.0};
    for (const auto& l : lines.lines) {
      v += l.signal / (r - itwopi * (f - l.frequency_hz));
      v += std::conj(l.signal) / (r - itwopi * (f + l.frequency_hz));
    }
    sp.values.push_back(v);
  }
  return sp;
}

std::vector<double> uniform_grid(double lo_hz, double hi_hz, int points) {
  if (points < 2) throw std::invalid_argument("grid needs at least two points");
  if (!(lo_hz < hi_hz)) throw std::invalid_argument("grid bounds must increase");
  std::vector<double> g(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i)
    g[static_cast<size_t>(i)] =
        lo_hz + (hi_hz - lo_hz) * static_cast<double>(i) / (points - 1);
  return g;
}

}  // namespace zulf
