#pragma once

#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace zulf {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

struct Nucleus {
  std::string isotope;  // e.g. "1H"; used for the built-in gamma table
  std::string site;     // unique site id within the molecule, e.g. "H2"
  double gamma = 0.0;   // rad s^-1 T^-1, signed
  double spin = 0.5;    // only spin-1/2 supported
};

// gamma lookup for the shipped isotope table; throws on unknown isotope
double gamma_of_isotope(const std::string& isotope);

struct MoleculeSpec {
  std::string name;
  std::vector<Nucleus> nuclei;
  std::map<std::pair<int, int>, double> j_couplings_hz;  // key (i,j) with i<j

  int size() const { return static_cast<int>(nuclei.size()); }
  int dimension() const { return 1 << nuclei.size(); }
  double j(int i, int j) const;
  void set_j(int i, int j, double hz);
  int site_index(const std::string& site) const;  // -1 if absent
  void validate() const;  // throws std::invalid_argument
};

struct FieldConfig {
  Eigen::Vector3d b_tesla = Eigen::Vector3d::Zero();
  static FieldConfig axial(double bz_tesla);
};

struct PolarizationConfig {
  double bp_tesla = 1.3;
  double temperature_k = 298.0;
  int guide_axis = 1;  // 0=x, 1=y, 2=z
  double epsilon(double gamma) const;  // gamma * Bp * hbar / (kB * T)
  void validate() const;
};

struct StateLabel {
  double f = 0.0;
  double m_f = 0.0;
  double k = -1.0;   // equivalent-proton manifold; < 0 when not assigned
  bool tie = false;  // set when assignment was ambiguous within a degenerate block
  std::string text() const;
};

struct EigenSystem {
  Eigen::VectorXd eigenvalues;  // rad/s, ascending
  Matrix eigenvectors;          // unitary, columns are states
  std::vector<StateLabel> labels;  // empty until labeled
  int dimension() const { return static_cast<int>(eigenvalues.size()); }
  bool labeled() const { return !labels.empty(); }
};

// spectral line of the free-evolution magnetization:
// M_zeta(t) = dc_zeta + sum_i 2 Re[amp_zeta,i exp(-i 2 pi nu_i t)]
struct Line {
  double frequency_hz = 0.0;  // > 0
  Complex amp_x{0, 0}, amp_y{0, 0}, amp_z{0, 0};
  std::string bra_label;  // upper state(s)
  std::string ket_label;  // lower state(s)
};

struct LineSet {
  std::vector<Line> lines;
  double dc_x = 0.0, dc_y = 0.0, dc_z = 0.0;  // non-precessing component
  double max_abs_amp() const;
};

// contiguous index ranges [start, end) of nearly equal entries in an
// ascending vector
std::vector<std::pair<int, int>> degenerate_index_groups(const Eigen::VectorXd& values,
                                                         double tol);

// dense spin-1/2 operators on the n-spin product space, axis 0=x 1=y 2=z
Matrix spin_operator(int n, int j, int axis);
Matrix total_spin(int n, int axis);                              // F_axis
Matrix subset_total_spin(int n, const std::vector<int>& members, int axis);
Matrix total_f2(int n);                                          // F.F
Matrix subset_f2(int n, const std::vector<int>& members);        // (sum I_j)^2 over members
Matrix weighted_spin(const MoleculeSpec& m, int axis);           // sum_j gamma_j I_j,axis

Matrix build_hamiltonian(const MoleculeSpec& m, const FieldConfig& field);  // rad/s

EigenSystem eigendecompose(const Matrix& h);  // throws on non-Hermitian input

// indices of the 1H nuclei when they form one equivalence class
// (identical gamma, identical couplings to every non-member, uniform
// couplings inside the group); empty otherwise
std::vector<int> equivalent_proton_group(const MoleculeSpec& m);

// assign (f, m_f, k) at zero field by simultaneous diagonalization of
// K^2 (when an equivalent-proton group exists), F^2 and F_z inside the
// degenerate blocks of H; ties are flagged, never silent
void label_zero_field_states(EigenSystem& es, const MoleculeSpec& m);

// carry labels from a zero-field reference onto a finite-field eigensystem
// by maximum vector overlap
void label_by_overlap(EigenSystem& es, const EigenSystem& zero_field_reference);

Matrix thermal_initial_state(const MoleculeSpec& m, const PolarizationConfig& pol);

LineSet line_decomposition(const EigenSystem& es, const Matrix& rho0,
                           const MoleculeSpec& m,
                           double merge_width_hz = 1e-6,
                           double amp_floor_rel = 1e-12);

double reconstruct(const LineSet& ls, double t, int axis);

struct PerturbativeLine {
  double frequency_hz = 0.0;
  double manifold_gap_hz = 0.0;  // zero-field gap this line sits on
  std::string bra_label, ket_label;
};

// first-order degenerate perturbation theory in the axial Zeeman term;
// independent oracle for the exact diagonalization path
std::vector<PerturbativeLine> perturbative_frequencies(const MoleculeSpec& m,
                                                       double bz_tesla);

}  // namespace zulf
