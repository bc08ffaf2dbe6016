#pragma once

#include <string>
#include <utility>
#include <vector>

#include "zulf/pipeline.hpp"

namespace zulf {

struct PeakFit {
  double center_hz = 0.0;
  double magnitude = 0.0;  // fitted height of the magnitude profile at center
  double width_hz = 0.0;   // 2h for the profile m*h/sqrt(h^2+(nu-c)^2), i.e. 1/(pi*T2)
};

struct DoubletFit {
  PeakFit low, high;  // ordered by center frequency
  double baseline = 0.0;
  double baseline_slope = 0.0;
  double residual_norm = 0.0;  // rms residual over the larger peak height
  int iterations = 0;
};

// least-squares fit of two Lorentzian magnitude profiles plus a linear
// baseline to |S(nu)| inside [center - w/2, center + w/2]
DoubletFit fit_doublet(const Spectrum& sp, double center_hz, double search_window_hz);

// (low - high) / (low + high); positive when the lower-frequency peak is taller
double asymmetry_ratio(const PeakFit& low, const PeakFit& high);

struct EtaPoint {
  double bz_tesla = 0.0;
  double eta = 0.0;
  double amp_low = 0.0;
  double amp_high = 0.0;
  double splitting_hz = 0.0;
  bool valid = false;
  std::string reason;  // empty when valid
};

struct SweepOptions {
  double center_hz = 0.0;  // 0 = center on the strongest zero-field line
  double window_halfwidth_hz = 15.0;
  double min_separation_widths = 3.0;  // dead zone where the doublet merges
  int points_per_width = 8;            // spectral grid resolution
  double line_floor_rel = 1e-3;        // in-window lines weaker than this are background
};

struct EtaCurve {
  std::vector<EtaPoint> points;  // ascending in bz
  double center_hz = 0.0;
  double t2_s = 0.0;
  double kappa = 0.0;
  double light_shift_tesla = 0.0;
  std::string molecule_name;
};

EtaCurve eta_sweep(const MoleculeSpec& m, const SensorModel& sensor_template,
                   const CouplingConfig& coupling, const AcquisitionConfig& acq,
                   const std::vector<double>& bz_grid_tesla,
                   const PolarizationConfig& pol = PolarizationConfig{},
                   const SweepOptions& options = SweepOptions{});

struct CrossPoint {
  double bz_tesla = 0.0;
  bool trivial = false;  // bracket straddles zero field or unresolved points
};

// roots of eta(bz) from sign changes between consecutive valid samples; each
// root comes from a least-squares line through the k nearest valid points
std::vector<CrossPoint> find_cross_points(const EtaCurve& curve, int k = 4);

struct RegionSummary {
  int sign = 0;  // dominant eta sign inside the region, 0 when mixed
  int points = 0;
  double agreement = 0.0;
};

struct GSignResult {
  int g_sign = 0;  // +1, -1, or 0 = undetermined
  RegionSummary regions[3];
  std::vector<CrossPoint> cross_points;
  std::string note;
};

// sign pattern (-,+,-) across the three regions delimited by the two cross
// points maps to +1, (+,-,+) to -1, anything else to undetermined
GSignResult infer_g_sign(const EtaCurve& curve);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the fit residuals
  double light_shift_at(double power) const { return -(slope * power + intercept); }
};

// ordinary least squares through (pump_power, magic_field) points
LineFit light_shift_from_power(const std::vector<std::pair<double, double>>& points);

}  // namespace zulf
