#include "zulf/spin_system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zulf/constants.hpp"

namespace zulf {

namespace {

constexpr Complex kI{0.0, 1.0};

Matrix pauli(int axis) {
  Matrix s(2, 2);
  switch (axis) {
    case 0: s << 0, 1, 1, 0; break;
    case 1: s << 0, -kI, kI, 0; break;
    case 2: s << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("axis must be 0, 1 or 2");
  }
  return s;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

std::string fmt_half(double v, bool force_sign) {
  const long n2 = std::lround(2.0 * v);
  std::string s;
  if (n2 % 2 == 0) {
    s = std::to_string(n2 / 2);
  } else {
    s = std::to_string(n2) + "/2";
  }
  if (force_sign && n2 > 0) s = "+" + s;
  return s;
}

double quantum_number_from_casimir(double x) {
  // solve q(q+1) = x for q >= 0
  return 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * std::max(0.0, x)));
}

void check_half_integer(double v, const char* what) {
  if (std::abs(2.0 * v - std::lround(2.0 * v)) > 2e-6)
    throw std::runtime_error(std::string(what) +
                             " expectation is not half-integer within tolerance");
}

}  // namespace

std::vector<std::pair<int, int>> degenerate_index_groups(const Eigen::VectorXd& vals,
                                                         double tol) {
  std::vector<std::pair<int, int>> groups;
  int start = 0;
  for (int i = 1; i <= vals.size(); ++i) {
    if (i == vals.size() || vals[i] - vals[i - 1] > tol) {
      groups.emplace_back(start, i);
      start = i;
    }
  }
  return groups;
}

double gamma_of_isotope(const std::string& isotope) {
  using namespace constants;
  if (isotope == "1H") return gamma_1h;
  if (isotope == "13C") return gamma_13c;
  if (isotope == "15N") return gamma_15n;
  if (isotope == "19F") return gamma_19f;
  if (isotope == "31P") return gamma_31p;
  throw std::invalid_argument("unknown isotope '" + isotope +
                              "' (supported: 1H 13C 15N 19F 31P, or give an explicit gamma)");
}

double MoleculeSpec::j(int i, int jdx) const {
  if (i == jdx) return 0.0;
  auto key = std::minmax(i, jdx);
  auto it = j_couplings_hz.find({key.first, key.second});
  return it == j_couplings_hz.end() ? 0.0 : it->second;
}

void MoleculeSpec::set_j(int i, int jdx, double hz) {
  if (i == jdx) throw std::invalid_argument("self-coupling is not allowed");
  auto key = std::minmax(i, jdx);
  j_couplings_hz[{key.first, key.second}] = hz;
}

int MoleculeSpec::site_index(const std::string& site) const {
  for (int i = 0; i < size(); ++i)
    if (nuclei[i].site == site) return i;
  return -1;
}

void MoleculeSpec::validate() const {
  if (nuclei.empty() || nuclei.size() > 8)
    throw std::invalid_argument("molecule must have between 1 and 8 nuclei");
  for (const auto& nuc : nuclei) {
    if (nuc.spin != 0.5)
      throw std::invalid_argument("nucleus '" + nuc.site + "': only spin-1/2 is supported");
    if (!std::isfinite(nuc.gamma) || nuc.gamma == 0.0)
      throw std::invalid_argument("nucleus '" + nuc.site + "': gamma must be finite and nonzero");
  }
  for (int i = 0; i < size(); ++i)
    for (int k = i + 1; k < size(); ++k)
      if (!nuclei[i].site.empty() && nuclei[i].site == nuclei[k].site)
        throw std::invalid_argument("duplicate site id '" + nuclei[i].site + "'");
  for (const auto& [key, val] : j_couplings_hz) {
    if (key.first < 0 || key.second >= size() || key.first >= key.second)
      throw std::invalid_argument("J table references nuclei outside the molecule");
    if (!std::isfinite(val))
      throw std::invalid_argument("J coupling must be finite");
  }
}

FieldConfig FieldConfig::axial(double bz_tesla) {
  FieldConfig f;
  f.b_tesla = Eigen::Vector3d(0.0, 0.0, bz_tesla);
  return f;
}

double PolarizationConfig::epsilon(double gamma) const {
  return gamma * bp_tesla * constants::hbar / (constants::k_boltzmann * temperature_k);
}

void PolarizationConfig::validate() const {
  if (!(bp_tesla >= 0.0) || !std::isfinite(bp_tesla))
    throw std::invalid_argument("prepolarizing field must be >= 0");
  if (!(temperature_k > 0.0))
    throw std::invalid_argument("temperature must be > 0");
  if (guide_axis < 0 || guide_axis > 2)
    throw std::invalid_argument("guide axis must be x, y or z");
}

std::string StateLabel::text() const {
  std::string s;
  if (k >= 0.0) s = "k=" + fmt_half(k, false) + " ";
  s += "|" + fmt_half(f, false) + "," + fmt_half(m_f, true) + ">";
  if (tie) s += "*";
  return s;
}

double LineSet::max_abs_amp() const {
  double m = 0.0;
  for (const auto& l : lines)
    m = std::max({m, std::abs(l.amp_x), std::abs(l.amp_y), std::abs(l.amp_z)});
  return m;
}

Matrix spin_operator(int n, int j, int axis) {
  if (j < 0 || j >= n) throw std::invalid_argument("spin index out of range");
  const int left = 1 << j;
  const int right = 1 << (n - 1 - j);
  return kron(Matrix::Identity(left, left),
              kron(0.5 * pauli(axis), Matrix::Identity(right, right)));
}

Matrix total_spin(int n, int axis) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  return subset_total_spin(n, all, axis);
}

Matrix subset_total_spin(int n, const std::vector<int>& members, int axis) {
  const int d = 1 << n;
  Matrix f = Matrix::Zero(d, d);
  for (int j : members) f += spin_operator(n, j, axis);
  return f;
}

Matrix total_f2(int n) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  return subset_f2(n, all);
}

Matrix subset_f2(int n, const std::vector<int>& members) {
  const int d = 1 << n;
  Matrix f2 = Matrix::Zero(d, d);
  for (int axis = 0; axis < 3; ++axis) {
    Matrix f = subset_total_spin(n, members, axis);
    f2 += f * f;
  }
  return f2;
}

Matrix weighted_spin(const MoleculeSpec& m, int axis) {
  const int d = m.dimension();
  Matrix o = Matrix::Zero(d, d);
  for (int j = 0; j < m.size(); ++j)
    o += m.nuclei[j].gamma * spin_operator(m.size(), j, axis);
  return o;
}

Matrix build_hamiltonian(const MoleculeSpec& m, const FieldConfig& field) {
  m.validate();
  if (!field.b_tesla.allFinite())
    throw std::invalid_argument("field components must be finite");
  const int n = m.size();
  const int d = m.dimension();
  Matrix h = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    for (int jdx = i + 1; jdx < n; ++jdx) {
      const double jij = m.j(i, jdx);
      if (jij == 0.0) continue;
      for (int axis = 0; axis < 3; ++axis)
        h += (2.0 * constants::pi * jij) *
             (spin_operator(n, i, axis) * spin_operator(n, jdx, axis));
    }
  }
  for (int jdx = 0; jdx < n; ++jdx)
    for (int axis = 0; axis < 3; ++axis)
      if (field.b_tesla[axis] != 0.0)
        h -= m.nuclei[jdx].gamma * field.b_tesla[axis] * spin_operator(n, jdx, axis);
  return 0.5 * (h + Matrix(h.adjoint()));
}

EigenSystem eigendecompose(const Matrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0)
    throw std::invalid_argument("hamiltonian must be square and non-empty");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - Matrix(h.adjoint())).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed to converge");
  EigenSystem es;
  es.eigenvalues = solver.eigenvalues();
  es.eigenvectors = solver.eigenvectors();
  const double hnorm = std::max(1e-300, h.norm());
  const double resid = (h * es.eigenvectors -
                        es.eigenvectors * es.eigenvalues.asDiagonal().toDenseMatrix().cast<Complex>())
                           .colwise().norm().maxCoeff();
  if (resid > 1e-9 * hnorm)
    throw std::runtime_error("eigendecomposition residual exceeds tolerance");
  return es;
}

std::vector<int> equivalent_proton_group(const MoleculeSpec& m) {
  std::vector<int> protons;
  for (int i = 0; i < m.size(); ++i)
    if (m.nuclei[i].isotope == "1H") protons.push_back(i);
  if (protons.empty()) return {};
  for (size_t a = 1; a < protons.size(); ++a)
    if (m.nuclei[protons[a]].gamma != m.nuclei[protons[0]].gamma) return {};
  // identical couplings to every non-member
  for (int o = 0; o < m.size(); ++o) {
    if (std::find(protons.begin(), protons.end(), o) != protons.end()) continue;
    for (size_t a = 1; a < protons.size(); ++a)
      if (m.j(protons[a], o) != m.j(protons[0], o)) return {};
  }
  // uniform couplings inside the group
  if (protons.size() >= 2) {
    const double j0 = m.j(protons[0], protons[1]);
    for (size_t a = 0; a < protons.size(); ++a)
      for (size_t b = a + 1; b < protons.size(); ++b)
        if (m.j(protons[a], protons[b]) != j0) return {};
  }
  return protons;
}

void label_zero_field_states(EigenSystem& es, const MoleculeSpec& m) {
  const int d = es.dimension();
  if (d != m.dimension())
    throw std::invalid_argument("eigensystem dimension does not match molecule");
  const int n = m.size();
  const double scale = std::max(1.0, es.eigenvalues.cwiseAbs().maxCoeff());
  const double tol = 1e-6 * scale;

  std::vector<Matrix> chain;
  std::vector<int> kind;  // 0=K^2, 1=F^2, 2=F_z
  const std::vector<int> protons = equivalent_proton_group(m);
  const bool has_k = !protons.empty();
  if (has_k) {
    chain.push_back(subset_f2(n, protons));
    kind.push_back(0);
  }
  chain.push_back(total_f2(n));
  kind.push_back(1);
  chain.push_back(total_spin(n, 2));
  kind.push_back(2);

  struct Block {
    int start, end;  // column range
  };
  std::vector<Block> blocks;
  for (auto [s, e] : degenerate_index_groups(es.eigenvalues, tol)) blocks.push_back({s, e});

  // per-state quantum numbers gathered as the chain refines the blocks
  Eigen::MatrixXd qn = Eigen::MatrixXd::Zero(d, chain.size());

  for (size_t c = 0; c < chain.size(); ++c) {
    std::vector<Block> refined;
    for (const Block& blk : blocks) {
      const int w = blk.end - blk.start;
      Matrix v = es.eigenvectors.middleCols(blk.start, w);
      Matrix b = v.adjoint() * chain[c] * v;
      Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (b + Matrix(b.adjoint())));
      if (solver.info() != Eigen::Success)
        throw std::runtime_error("labeling eigensolver failed");
      es.eigenvectors.middleCols(blk.start, w) = v * solver.eigenvectors();
      for (int i = 0; i < w; ++i) qn(blk.start + i, c) = solver.eigenvalues()[i];
      for (auto [s, e] : degenerate_index_groups(solver.eigenvalues(), 1e-6))
        refined.push_back({blk.start + s, blk.start + e});
    }
    blocks = refined;
  }

  es.labels.assign(d, StateLabel{});
  for (int i = 0; i < d; ++i) {
    StateLabel lab;
    int col = 0;
    if (has_k) {
      lab.k = quantum_number_from_casimir(qn(i, col));
      check_half_integer(lab.k, "k");
      lab.k = std::lround(2.0 * lab.k) / 2.0;
      ++col;
    }
    lab.f = quantum_number_from_casimir(qn(i, col));
    check_half_integer(lab.f, "f");
    lab.f = std::lround(2.0 * lab.f) / 2.0;
    ++col;
    lab.m_f = qn(i, col);
    check_half_integer(lab.m_f, "m_f");
    lab.m_f = std::lround(2.0 * lab.m_f) / 2.0;
    es.labels[i] = lab;
  }
  // states the chain could not separate keep identical labels; flag them
  for (const Block& blk : blocks)
    if (blk.end - blk.start > 1)
      for (int i = blk.start; i < blk.end; ++i) es.labels[i].tie = true;
}

void label_by_overlap(EigenSystem& es, const EigenSystem& ref) {
  if (!ref.labeled())
    throw std::invalid_argument("reference eigensystem carries no labels");
  if (ref.dimension() != es.dimension())
    throw std::invalid_argument("dimension mismatch between eigensystems");
  const int d = es.dimension();
  es.labels.assign(d, StateLabel{});
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd ov = (ref.eigenvectors.adjoint() * es.eigenvectors.col(i)).cwiseAbs2();
    int best = 0;
    ov.maxCoeff(&best);
    double second = 0.0;
    for (int j = 0; j < d; ++j)
      if (j != best) second = std::max(second, ov[j]);
    es.labels[i] = ref.labels[best];
    es.labels[i].tie = ref.labels[best].tie || (ov[best] - second < 1e-6);
  }
}

Matrix thermal_initial_state(const MoleculeSpec& m, const PolarizationConfig& pol) {
  m.validate();
  pol.validate();
  const int d = m.dimension();
  Matrix rho = Matrix::Identity(d, d);
  for (int j = 0; j < m.size(); ++j)
    rho += pol.epsilon(m.nuclei[j].gamma) * spin_operator(m.size(), j, pol.guide_axis);
  return rho / static_cast<double>(d);
}

LineSet line_decomposition(const EigenSystem& es, const Matrix& rho0,
                           const MoleculeSpec& m, double merge_width_hz,
                           double amp_floor_rel) {
  const int d = es.dimension();
  if (rho0.rows() != d || rho0.cols() != d)
    throw std::invalid_argument("density matrix dimension does not match eigensystem");
  const Matrix& u = es.eigenvectors;
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
  LineSet ls;
  double max_pair_amp = 0.0;
  for (int a = 0; a < d; ++a) {
    ls.dc_x += std::real(rho_e(a, a) * ox(a, a));
    ls.dc_y += std::real(rho_e(a, a) * oy(a, a));
    ls.dc_z += std::real(rho_e(a, a) * oz(a, a));
    for (int b = 0; b < a; ++b) {
      const double freq =
          (es.eigenvalues[a] - es.eigenvalues[b]) / (2.0 * constants::pi);
      const Complex ax = rho_e(a, b) * ox(b, a);
      const Complex ay = rho_e(a, b) * oy(b, a);
      const Complex az = rho_e(a, b) * oz(b, a);
      if (freq < merge_width_hz) {
        // exactly degenerate coherence: non-precessing, counted with both orderings
        ls.dc_x += 2.0 * std::real(ax);
        ls.dc_y += 2.0 * std::real(ay);
        ls.dc_z += 2.0 * std::real(az);
        continue;
      }
      pairs.push_back({freq, ax, ay, az, a, b});
      max_pair_amp = std::max(
          {max_pair_amp, std::abs(ax), std::abs(ay), std::abs(az)});
    }
  }
  // drop numerically empty pairs before merging so labels stay meaningful
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

  size_t i = 0;
  while (i < pairs.size()) {
    size_t jdx = i + 1;
    while (jdx < pairs.size() && pairs[jdx].freq - pairs[jdx - 1].freq <= merge_width_hz)
      ++jdx;
    Line line;
    double fsum = 0.0;
    std::vector<std::string> bras, kets;
    for (size_t p = i; p < jdx; ++p) {
      line.amp_x += pairs[p].ax;
      line.amp_y += pairs[p].ay;
      line.amp_z += pairs[p].az;
      fsum += pairs[p].freq;
      bras.push_back(label_of(pairs[p].a));
      kets.push_back(label_of(pairs[p].b));
    }
    line.frequency_hz = fsum / static_cast<double>(jdx - i);
    line.bra_label = join(bras);
    line.ket_label = join(kets);
    ls.lines.push_back(line);
    i = jdx;
  }
  const double floor = amp_floor_rel * ls.max_abs_amp();
  std::erase_if(ls.lines, [&](const Line& l) {
    return std::abs(l.amp_x) < floor && std::abs(l.amp_y) < floor &&
           std::abs(l.amp_z) < floor;
  });
  return ls;
}

double reconstruct(const LineSet& ls, double t, int axis) {
  double dc;
  switch (axis) {
    case 0: dc = ls.dc_x; break;
    case 1: dc = ls.dc_y; break;
    case 2: dc = ls.dc_z; break;
    default: throw std::invalid_argument("axis must be 0, 1 or 2");
  }
  double m = dc;
  for (const auto& l : ls.lines) {
    const Complex amp = axis == 0 ? l.amp_x : axis == 1 ? l.amp_y : l.amp_z;
    m += 2.0 * std::real(amp * std::exp(-kI * (2.0 * constants::pi * l.frequency_hz * t)));
  }
  return m;
}

std::vector<PerturbativeLine> perturbative_frequencies(const MoleculeSpec& m,
                                                       double bz_tesla) {
  m.validate();
  Matrix h0 = build_hamiltonian(m, FieldConfig{});
  EigenSystem es0 = eigendecompose(h0);
  label_zero_field_states(es0, m);

  const double scale = std::max(1.0, es0.eigenvalues.cwiseAbs().maxCoeff());
  const auto groups = degenerate_index_groups(es0.eigenvalues, 1e-6 * scale);

  // validity is set by the smallest gap between manifolds, not by the
  // smallest coupling constant
  double gamma_max = 0.0;
  for (const auto& nuc : m.nuclei) gamma_max = std::max(gamma_max, std::abs(nuc.gamma));
  double gap_min = 0.0;
  for (size_t i = 1; i < groups.size(); ++i) {
    const double gap =
        es0.eigenvalues[groups[i].first] - es0.eigenvalues[groups[i - 1].first];
    gap_min = gap_min == 0.0 ? gap : std::min(gap_min, gap);
  }
  if (gap_min > 0.0 && std::abs(gamma_max * bz_tesla) >= gap_min / 10.0)
    throw std::domain_error("field too large for first-order perturbation theory");

  const int d = es0.dimension();
  Matrix v = Matrix::Zero(d, d);
  for (int j = 0; j < m.size(); ++j)
    v -= m.nuclei[j].gamma * bz_tesla * spin_operator(m.size(), j, 2);

  struct State {
    double energy;     // corrected, rad/s
    double e0;         // manifold energy, rad/s
    StateLabel label;
  };
  std::vector<State> states;
  for (auto [s, e] : groups) {
    const int w = e - s;
    Matrix p = es0.eigenvectors.middleCols(s, w);
    Matrix pvp = p.adjoint() * v * p;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (pvp + Matrix(pvp.adjoint())));
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("perturbation eigensolver failed");
    for (int i = 0; i < w; ++i) {
      // label by the dominant zero-field component of the corrected state
      int best = 0;
      solver.eigenvectors().col(i).cwiseAbs2().maxCoeff(&best);
      states.push_back({es0.eigenvalues[s] + solver.eigenvalues()[i],
                        es0.eigenvalues[s], es0.labels[s + best]});
    }
  }

  std::vector<PerturbativeLine> out;
  for (size_t a = 0; a < states.size(); ++a) {
    for (size_t b = 0; b < states.size(); ++b) {
      const double gap = states[a].energy - states[b].energy;
      if (gap <= 0.0) continue;
      const double dm = std::abs(states[a].label.m_f - states[b].label.m_f);
      if (dm < 0.5 || dm > 1.5)
        continue;  // only |delta m_f| = 1 carries transverse amplitude
      PerturbativeLine pl;
      pl.frequency_hz = gap / (2.0 * constants::pi);
      pl.manifold_gap_hz = (states[a].e0 - states[b].e0) / (2.0 * constants::pi);
      pl.bra_label = states[a].label.text();
      pl.ket_label = states[b].label.text();
      out.push_back(pl);
    }
  }
  std::sort(out.begin(), out.end(), [](const PerturbativeLine& l, const PerturbativeLine& r) {
    return l.frequency_hz < r.frequency_hz;
  });
  return out;
}

}  // namespace zulf
