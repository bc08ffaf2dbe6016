#include "zulf/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "zulf/constants.hpp"

namespace zulf {

namespace {

struct DoubletModel {
  // p = (c1, m1, h1, c2, m2, h2, b0, b1), baseline slope taken about `pivot`
  double pivot = 0.0;

  double eval(const Eigen::VectorXd& p, double nu) const {
    double v = p[6] + p[7] * (nu - pivot);
    for (int i = 0; i < 2; ++i) {
      const double d = nu - p[3 * i];
      const double h = p[3 * i + 2];
      v += p[3 * i + 1] * h / std::sqrt(h * h + d * d);
    }
    return v;
  }

  void jacobian_row(const Eigen::VectorXd& p, double nu,
                    Eigen::Ref<Eigen::VectorXd> row) const {
    for (int i = 0; i < 2; ++i) {
      const double d = nu - p[3 * i];
      const double h = p[3 * i + 2];
      const double m = p[3 * i + 1];
      const double q = h * h + d * d;
      const double rq = std::sqrt(q);
      row[3 * i] = m * h * d / (q * rq);
      row[3 * i + 1] = h / rq;
      row[3 * i + 2] = m * d * d / (q * rq);
    }
    row[6] = 1.0;
    row[7] = nu - pivot;
  }
};

double estimate_halfwidth(const std::vector<double>& nu, const std::vector<double>& mag,
                          size_t peak, double floor, double fallback) {
  const double half = floor + (mag[peak] - floor) / 2.0;
  double left = 0.0, right = 0.0;
  for (size_t i = peak; i-- > 0;)
    if (mag[i] <= half) {
      left = nu[peak] - nu[i];
      break;
    }
  for (size_t i = peak + 1; i < nu.size(); ++i)
    if (mag[i] <= half) {
      right = nu[i] - nu[peak];
      break;
    }
  double w = 0.0;
  if (left > 0.0 && right > 0.0) w = std::min(left, right);
  else w = std::max(left, right);
  if (w <= 0.0) w = fallback;
  // the magnitude profile reaches half height at sqrt(3) halfwidths
  return std::max(w / std::sqrt(3.0), fallback);
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

}  // namespace

DoubletFit fit_doublet(const Spectrum& sp, double center_hz, double search_window_hz) {
  if (!(search_window_hz > 0.0))
    throw std::invalid_argument("search window must be positive");
  std::vector<double> nu, mag;
  for (size_t i = 0; i < sp.grid_hz.size(); ++i)
    if (std::abs(sp.grid_hz[i] - center_hz) <= search_window_hz / 2.0) {
      nu.push_back(sp.grid_hz[i]);
      mag.push_back(std::abs(sp.values[i]));
    }
  const size_t n = nu.size();
  if (n < 16) throw std::invalid_argument("fit window holds too few samples");

  std::vector<size_t> maxima;
  for (size_t i = 1; i + 1 < n; ++i)
    if (mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) maxima.push_back(i);
  std::sort(maxima.begin(), maxima.end(),
            [&](size_t a, size_t b) { return mag[a] > mag[b]; });
  if (maxima.size() < 2)
    throw std::runtime_error("window does not hold two resolvable peaks");
  size_t p1 = maxima[0], p2 = maxima[1];
  if (nu[p1] > nu[p2]) std::swap(p1, p2);

  const double floor = *std::min_element(mag.begin(), mag.end());
  const double peak_mag = std::max(mag[p1], mag[p2]);
  const double step = (nu.back() - nu.front()) / static_cast<double>(n - 1);

  DoubletModel model;
  model.pivot = center_hz;
  Eigen::VectorXd p(8);
  p << nu[p1], mag[p1] - floor, estimate_halfwidth(nu, mag, p1, floor, step),
      nu[p2], mag[p2] - floor, estimate_halfwidth(nu, mag, p2, floor, step),
      floor, 0.0;

  auto cost_of = [&](const Eigen::VectorXd& q) {
    double c = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double r = model.eval(q, nu[i]) - mag[i];
      c += r * r;
    }
    return c;
  };

  double lambda = 1e-3;
  double cost = cost_of(p);
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd jac(n, 8);
  Eigen::VectorXd resid(n), row(8);
  for (; iterations < 200 && !converged; ++iterations) {
    for (size_t i = 0; i < n; ++i) {
      model.jacobian_row(p, nu[i], row);
      jac.row(static_cast<Eigen::Index>(i)) = row;
      resid[static_cast<Eigen::Index>(i)] = model.eval(p, nu[i]) - mag[i];
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * resid;
    bool stepped = false;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::MatrixXd damped = jtj;
      for (int d = 0; d < 8; ++d)
        damped(d, d) += lambda * std::max(jtj(d, d), 1e-30);
      Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      Eigen::VectorXd trial = p + delta;
      trial[2] = std::abs(trial[2]);
      trial[5] = std::abs(trial[5]);
      const double trial_cost = cost_of(trial);
      if (trial_cost <= cost) {
        const double drop = cost - trial_cost;
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (drop <= 1e-14 * std::max(cost, 1e-300) ||
            delta.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + p.cwiseAbs().maxCoeff()))
          converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) {
      // a stall counts as convergence only when the model already explains
      // the peak; otherwise fail loudly
      converged =
          std::sqrt(cost / static_cast<double>(n)) <= 1e-2 * peak_mag;
      break;
    }
  }
  if (!converged) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "doublet fit did not converge, rms residual %.3e",
                  std::sqrt(cost / static_cast<double>(n)));
    throw std::runtime_error(msg);
  }

  if (p[0] > p[3]) {
    std::swap(p[0], p[3]);
    std::swap(p[1], p[4]);
    std::swap(p[2], p[5]);
  }
  if (p[1] <= 0.0 || p[4] <= 0.0)
    throw std::runtime_error("doublet fit collapsed a peak");
  const double sep = p[3] - p[0];
  const double lw1 = 2.0 * p[2], lw2 = 2.0 * p[5];
  if (sep < 2.0 * std::max(lw1, lw2))
    throw std::runtime_error("peaks closer than two linewidths are not resolvable");

  DoubletFit fit;
  fit.low = {p[0], p[1], lw1};
  fit.high = {p[3], p[4], lw2};
  fit.baseline = p[6];
  fit.baseline_slope = p[7];
  fit.residual_norm = std::sqrt(cost / static_cast<double>(n)) /
                      std::max(std::max(p[1], p[4]), 1e-300);
  fit.iterations = iterations;
  return fit;
}

double asymmetry_ratio(const PeakFit& low, const PeakFit& high) {
  if (low.magnitude < 0.0 || high.magnitude < 0.0)
    throw std::invalid_argument("peak magnitudes must be non-negative");
  const double sum = low.magnitude + high.magnitude;
  if (sum <= 0.0) throw std::invalid_argument("both peak magnitudes are zero");
  return (low.magnitude - high.magnitude) / sum;
}

EtaCurve eta_sweep(const MoleculeSpec& m, const SensorModel& sensor_template,
                   const CouplingConfig& coupling, const AcquisitionConfig& acq,
                   const std::vector<double>& bz_grid_tesla,
                   const PolarizationConfig& pol, const SweepOptions& options) {
  m.validate();
  coupling.validate();
  acq.validate();
  sensor_template.validate();
  pol.validate();
  if (bz_grid_tesla.empty()) throw std::invalid_argument("empty field grid");
  if (options.points_per_width < 2 || !(options.window_halfwidth_hz > 0.0) ||
      !(options.min_separation_widths >= 0.0))
    throw std::invalid_argument("bad sweep options");

  const Matrix rho = thermal_initial_state(m, pol);

  double center = options.center_hz;
  if (center <= 0.0) {
    auto es0 = eigendecompose(build_hamiltonian(m, FieldConfig::axial(0.0)));
    auto ls0 = line_decomposition(es0, rho, m);
    double best = -1.0;
    for (const auto& l : ls0.lines) {
      const double a = std::max({std::abs(l.amp_x), std::abs(l.amp_y), std::abs(l.amp_z)});
      if (a > best) {
        best = a;
        center = l.frequency_hz;
      }
    }
    if (center <= 0.0) throw std::runtime_error("no zero-field line to center on");
  }

  const double fwhm = acq.decay_rate() / constants::pi;
  const double hw = options.window_halfwidth_hz;
  const int grid_points =
      2 * static_cast<int>(std::ceil(hw * options.points_per_width / fwhm)) + 1;
  const auto freq_grid = uniform_grid(center - hw, center + hw, grid_points);

  std::vector<double> bz(bz_grid_tesla);
  std::sort(bz.begin(), bz.end());

  EtaCurve curve;
  curve.center_hz = center;
  curve.t2_s = acq.t2_s;
  curve.kappa = coupling.kappa;
  curve.light_shift_tesla = sensor_template.light_shift_tesla;
  curve.molecule_name = m.name;
  curve.points.reserve(bz.size());

  for (double b : bz) {
    EtaPoint pt;
    pt.bz_tesla = b;
    try {
      auto es = eigendecompose(build_hamiltonian(m, FieldConfig::axial(b)));
      auto ls = line_decomposition(es, rho, m);
      SensorModel sensor = sensor_template;
      sensor.bias_bz_tesla = b;
      auto sl = sensor_signal_lines(ls, sensor, coupling);

      double strongest = 0.0;
      for (const auto& l : sl.lines)
        if (std::abs(l.frequency_hz - center) <= hw)
          strongest = std::max(strongest, std::abs(l.signal));
      std::vector<const SensorLine*> kept;
      for (const auto& l : sl.lines)
        if (std::abs(l.frequency_hz - center) <= hw &&
            std::abs(l.signal) >= options.line_floor_rel * strongest)
          kept.push_back(&l);
      if (kept.size() != 2)
        throw std::runtime_error("expected a doublet in the window, found " +
                                 std::to_string(kept.size()) + " line(s)");
      pt.splitting_hz =
          std::abs(kept[1]->frequency_hz - kept[0]->frequency_hz);
      if (pt.splitting_hz < options.min_separation_widths * fwhm)
        throw std::runtime_error("doublet merged at this field");

      auto spectrum = analytic_spectrum(sl, acq, freq_grid);
      auto fit = fit_doublet(spectrum, center, 2.0 * hw);
      pt.amp_low = fit.low.magnitude;
      pt.amp_high = fit.high.magnitude;
      pt.eta = asymmetry_ratio(fit.low, fit.high);
      pt.valid = true;
    } catch (const std::exception& e) {
      pt.valid = false;
      pt.reason = e.what();
    }
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

std::vector<CrossPoint> find_cross_points(const EtaCurve& curve, int k) {
  if (k < 2) throw std::invalid_argument("need at least two points per root fit");
  std::vector<const EtaPoint*> valid;
  for (const auto& p : curve.points)
    if (p.valid) valid.push_back(&p);
  if (valid.size() < 2)
    throw std::runtime_error("curve has fewer than two valid points");

  double step = 0.0;
  if (curve.points.size() > 1) {
    std::vector<double> diffs;
    for (size_t i = 1; i < curve.points.size(); ++i)
      diffs.push_back(curve.points[i].bz_tesla - curve.points[i - 1].bz_tesla);
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    step = diffs[diffs.size() / 2];
  }

  std::vector<CrossPoint> roots;
  for (size_t i = 0; i + 1 < valid.size(); ++i) {
    const EtaPoint& a = *valid[i];
    const EtaPoint& b = *valid[i + 1];
    const int sa = sign_of(a.eta), sb = sign_of(b.eta);
    if (sa == 0 || sb == 0 || sa == sb) continue;

    bool trivial = a.bz_tesla <= 0.0 && b.bz_tesla >= 0.0;
    for (const auto& p : curve.points)
      if (!p.valid && p.bz_tesla > a.bz_tesla && p.bz_tesla < b.bz_tesla)
        trivial = true;

    const double mid = (a.bz_tesla + b.bz_tesla) / 2.0;
    std::vector<const EtaPoint*> nearest(valid);
    std::sort(nearest.begin(), nearest.end(),
              [mid](const EtaPoint* l, const EtaPoint* r) {
                return std::abs(l->bz_tesla - mid) < std::abs(r->bz_tesla - mid);
              });
    nearest.resize(std::min<size_t>(static_cast<size_t>(k), nearest.size()));

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(nearest.size());
    for (const auto* p : nearest) {
      sx += p->bz_tesla;
      sy += p->eta;
    }
    const double mx = sx / n, my = sy / n;
    for (const auto* p : nearest) {
      sxx += (p->bz_tesla - mx) * (p->bz_tesla - mx);
      sxy += (p->bz_tesla - mx) * (p->eta - my);
    }
    double root;
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    if (slope != 0.0) root = mx - my / slope;
    else root = a.bz_tesla - a.eta * (b.bz_tesla - a.bz_tesla) / (b.eta - a.eta);
    // keep the fitted root only if it stays near its bracket
    if (root < a.bz_tesla - step || root > b.bz_tesla + step)
      root = a.bz_tesla - a.eta * (b.bz_tesla - a.bz_tesla) / (b.eta - a.eta);
    roots.push_back({root, trivial});
  }
  if (roots.empty()) throw std::runtime_error("no sign change in the curve");
  std::sort(roots.begin(), roots.end(),
            [](const CrossPoint& l, const CrossPoint& r) {
              return l.bz_tesla < r.bz_tesla;
            });
  return roots;
}

GSignResult infer_g_sign(const EtaCurve& curve) {
  GSignResult res;
  try {
    res.cross_points = find_cross_points(curve);
  } catch (const std::exception& e) {
    res.note = e.what();
    return res;
  }
  if (res.cross_points.size() != 2) {
    res.note = "need exactly two sign changes, found " +
               std::to_string(res.cross_points.size());
    return res;
  }
  const double b1 = res.cross_points[0].bz_tesla;
  const double b2 = res.cross_points[1].bz_tesla;

  int positives[3] = {0, 0, 0}, negatives[3] = {0, 0, 0};
  for (const auto& p : curve.points) {
    if (!p.valid) continue;
    const int s = sign_of(p.eta);
    if (s == 0) continue;
    const int region = p.bz_tesla < b1 ? 0 : (p.bz_tesla < b2 ? 1 : 2);
    ++res.regions[region].points;
    (s > 0 ? positives : negatives)[region] += 1;
  }
  for (int i = 0; i < 3; ++i) {
    auto& r = res.regions[i];
    if (r.points < 3) {
      res.note = "a region has fewer than three valid points";
      return res;
    }
    const int dominant = std::max(positives[i], negatives[i]);
    r.agreement = static_cast<double>(dominant) / r.points;
    r.sign = r.agreement >= 0.8 ? (positives[i] >= negatives[i] ? 1 : -1) : 0;
  }
  const int s0 = res.regions[0].sign, s1 = res.regions[1].sign,
            s2 = res.regions[2].sign;
  if (s0 == -1 && s1 == 1 && s2 == -1) res.g_sign = 1;
  else if (s0 == 1 && s1 == -1 && s2 == 1) res.g_sign = -1;
  else res.note = "region signs do not form a recognized pattern";
  return res;
}

LineFit light_shift_from_power(const std::vector<std::pair<double, double>>& points) {
  const size_t n = points.size();
  if (n < 3) throw std::invalid_argument("need at least three points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, scale = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    scale += x * x;
  }
  if (sxx <= 1e-20 * (scale + 1.0))
    throw std::invalid_argument("pump powers are degenerate");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - (fit.slope * x + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace zulf
