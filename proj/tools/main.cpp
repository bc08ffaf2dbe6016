#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zulf/analysis.hpp"
#include "zulf/io.hpp"
#include "zulf/pipeline.hpp"
#include "zulf/sensor.hpp"
#include "zulf/spin_system.hpp"

namespace fs = std::filesystem;
using namespace zulf;

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_number_list(const std::string& spec, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto pos = spec.find(',', start);
    const std::string tok = spec.substr(
        start, pos == std::string::npos ? std::string::npos : pos - start);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw std::invalid_argument(what + ": not a number: '" + tok + "'");
    out.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw std::invalid_argument(what + ": empty list");
  return out;
}

// "lo:step:hi" or a comma-separated list, both in nT
std::vector<double> parse_grid_nt(const std::string& spec) {
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto pos = spec.find(':', start);
      if (pos == std::string::npos) {
        parts.push_back(spec.substr(start));
        break;
      }
      parts.push_back(spec.substr(start, pos - start));
      start = pos + 1;
    }
    if (parts.size() != 3)
      throw std::invalid_argument("field grid: expected lo:step:hi, got '" + spec + "'");
    double v[3];
    for (int i = 0; i < 3; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(parts[i].c_str(), &end);
      if (end == parts[i].c_str() || *end != '\0')
        throw std::invalid_argument("field grid: not a number: '" + parts[i] + "'");
    }
    if (!(v[1] > 0.0)) throw std::invalid_argument("field grid: step must be positive");
    if (v[2] < v[0]) throw std::invalid_argument("field grid: hi must be >= lo");
    const double count = std::floor((v[2] - v[0]) / v[1] + 1e-9) + 1.0;
    if (count > 100000.0) throw std::invalid_argument("field grid: too many points");
    std::vector<double> out;
    for (int k = 0; k < static_cast<int>(count); ++k) out.push_back(v[0] + k * v[1]);
    return out;
  }
  return parse_number_list(spec, "field grid");
}

struct CommonOptions {
  std::string molecule_ref;
  std::string sensor_ref;
  double kappa = 1.0;
  double field_scale = 1e-15;
  double t2_s = 3.0;
  double rate_hz = 2000.0;
  double duration_s = 30.0;
  double bp_tesla = 1.3;
  double temperature_k = 298.0;
  double light_shift_nt = 0.0;
  bool light_shift_set = false;
  std::string out_dir;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, CommonOptions& o, const std::string& default_out) {
  sub->add_option("--molecule", o.molecule_ref,
                  "molecule file path or shipped molecule name")
      ->required();
  sub->add_option("--sensor", o.sensor_ref,
                  "sensor file path or shipped sensor name (default: built-in)");
  sub->add_option("--kappa", o.kappa, "y-axis field weight at the cell");
  sub->add_option("--field-scale", o.field_scale, "tesla per magnetization unit");
  sub->add_option("--t2", o.t2_s, "decay time constant, s");
  sub->add_option("--rate", o.rate_hz, "sample rate, Hz");
  sub->add_option("--duration", o.duration_s, "acquisition length, s");
  sub->add_option("--bp", o.bp_tesla, "prepolarization field, T");
  sub->add_option("--temperature", o.temperature_k, "sample temperature, K");
  sub->add_option("--light-shift-nt", o.light_shift_nt,
                  "override the sensor light shift, nT")
      ->each([&o](const std::string&) { o.light_shift_set = true; });
  sub->add_option("--out", o.out_dir, "output directory")->default_val(default_out);
  sub->add_option("--seed", o.seed, "noise seed");
}

struct LoadedConfig {
  MoleculeSpec molecule;
  SensorModel sensor;
  CouplingConfig coupling;
  AcquisitionConfig acq;
  PolarizationConfig pol;
  std::string canonical;  // everything that determines the outputs
};

LoadedConfig load_common(const CommonOptions& o, const std::string& command) {
  LoadedConfig c;
  const std::string mol_path = io::resolve_data_file(o.molecule_ref, "molecules");
  const std::string mol_bytes = io::read_text_file(mol_path);
  c.molecule = io::parse_molecule_text(mol_bytes, mol_path);

  std::string sensor_bytes = "builtin";
  if (!o.sensor_ref.empty()) {
    const std::string sensor_path = io::resolve_data_file(o.sensor_ref, "sensors");
    sensor_bytes = io::read_text_file(sensor_path);
    c.sensor = io::parse_sensor_text(sensor_bytes, sensor_path);
  }
  if (o.light_shift_set) c.sensor.light_shift_tesla = o.light_shift_nt * 1e-9;

  c.coupling.kappa = o.kappa;
  c.coupling.field_scale = o.field_scale;
  c.coupling.validate();
  c.acq.t2_s = o.t2_s;
  c.acq.sample_rate_hz = o.rate_hz;
  c.acq.duration_s = o.duration_s;
  c.acq.validate();
  c.pol.bp_tesla = o.bp_tesla;
  c.pol.temperature_k = o.temperature_k;
  c.pol.validate();

  c.canonical = "command " + command + "\n";
  c.canonical += "molecule " + o.molecule_ref + "\n" + mol_bytes + "\n";
  c.canonical += "sensor " + (o.sensor_ref.empty() ? "builtin" : o.sensor_ref) + "\n" +
                 sensor_bytes + "\n";
  for (const auto& [key, val] :
       std::initializer_list<std::pair<const char*, double>>{
           {"kappa", o.kappa},
           {"field_scale", o.field_scale},
           {"t2", o.t2_s},
           {"rate", o.rate_hz},
           {"duration", o.duration_s},
           {"bp", o.bp_tesla},
           {"temperature", o.temperature_k},
           {"light_shift_nt", o.light_shift_set ? o.light_shift_nt
                                                : c.sensor.light_shift_tesla * 1e9},
           {"seed", static_cast<double>(o.seed)}})
    c.canonical += std::string(key) + " " + fmt_g(val) + "\n";
  return c;
}

void write_output(const std::string& dir, const std::string& name,
                  const std::string& content, std::vector<std::string>& files) {
  fs::create_directories(dir);
  io::write_text_file((fs::path(dir) / name).string(), content);
  files.push_back(name);
}

io::AnalysisReport report_from_curve(const EtaCurve& curve, const GSignResult& g,
                                     const std::string& command,
                                     const std::string& config_hash) {
  io::AnalysisReport r;
  r.command = command;
  r.config_hash = config_hash;
  r.molecule_name = curve.molecule_name;
  r.center_hz = curve.center_hz;
  r.total_points = static_cast<int>(curve.points.size());
  for (const auto& p : curve.points)
    if (p.valid) ++r.valid_points;
  r.cross_points = g.cross_points;
  r.g_sign = g.g_sign;
  r.g_note = g.note;
  for (int i = 0; i < 3; ++i) r.regions[i] = g.regions[i];
  std::optional<double> magic;
  for (const auto& cp : g.cross_points)
    if (!cp.trivial && !magic) magic = cp.bz_tesla;
  if (magic) {
    r.has_magic_field_estimate = true;
    r.magic_field_estimate_tesla = *magic;
  }
  return r;
}

int require_valid_points(const EtaCurve& curve) {
  int valid = 0;
  for (const auto& p : curve.points)
    if (p.valid) ++valid;
  if (valid == 0) throw std::runtime_error("no valid points in the sweep");
  return valid;
}

int cmd_simulate(const CommonOptions& o, double bz_nt, const std::string& window,
                 double noise_sigma) {
  LoadedConfig c = load_common(o, "simulate");
  c.acq.window = window == "exp-match" ? AcquisitionConfig::Window::exp_match
                                       : AcquisitionConfig::Window::none;
  c.canonical += "bz_nt " + fmt_g(bz_nt) + "\n";
  c.canonical += "window " + window + "\n";
  c.canonical += "noise " + fmt_g(noise_sigma) + "\n";
  const std::string hash = io::hash_hex(c.canonical);

  const double bz = bz_nt * 1e-9;
  c.sensor.bias_bz_tesla = bz;

  EigenSystem ref = eigendecompose(build_hamiltonian(c.molecule, FieldConfig{}));
  label_zero_field_states(ref, c.molecule);
  EigenSystem es = eigendecompose(build_hamiltonian(c.molecule, FieldConfig::axial(bz)));
  label_by_overlap(es, ref);
  const Matrix rho0 = thermal_initial_state(c.molecule, c.pol);
  const LineSet ls = line_decomposition(es, rho0, c.molecule);
  const SensorLineSet sl = sensor_signal_lines(ls, c.sensor, c.coupling);

  io::TimeSeries ts;
  ts.sample_rate_hz = c.acq.sample_rate_hz;
  ts.samples = synthesize_time_signal(sl, c.acq);
  if (noise_sigma > 0.0) add_noise(ts.samples, noise_sigma, o.seed);

  const Spectrum fft = spectrum_fft(ts.samples, c.acq);
  const Spectrum analytic = analytic_spectrum(sl, c.acq, fft.grid_hz);

  std::vector<std::string> files;
  write_output(o.out_dir, "simulate_00_time_series.tsv",
               io::format_time_series_tsv(ts, hash), files);
  write_output(o.out_dir, "simulate_01_fft_spectrum.tsv",
               io::format_spectrum_tsv(fft, hash), files);
  write_output(o.out_dir, "simulate_02_analytic_spectrum.tsv",
               io::format_spectrum_tsv(analytic, hash), files);
  write_output(o.out_dir, "simulate_03_lines.tsv",
               io::format_line_table_tsv(sl, hash), files);

  nlohmann::json j;
  j["command"] = "simulate";
  j["config_hash"] = hash;
  j["molecule"] = c.molecule.name;
  j["bz_nt"] = bz_nt;
  j["window"] = window;
  j["noise_sigma"] = noise_sigma;
  j["seed"] = o.seed;
  j["line_count"] = sl.lines.size();
  j["files"] = files;
  io::write_text_file((fs::path(o.out_dir) / "run.json").string(), j.dump(2) + "\n");
  std::printf("simulate: %zu lines, outputs in %s\n", sl.lines.size(),
              o.out_dir.c_str());
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& grid_spec) {
  LoadedConfig c = load_common(o, "sweep");
  c.canonical += "bz_grid " + grid_spec + "\n";
  const std::string hash = io::hash_hex(c.canonical);

  std::vector<double> grid;
  for (double nt : parse_grid_nt(grid_spec)) grid.push_back(nt * 1e-9);

  const EtaCurve curve =
      eta_sweep(c.molecule, c.sensor, c.coupling, c.acq, grid, c.pol);
  require_valid_points(curve);
  const GSignResult g = infer_g_sign(curve);
  const io::AnalysisReport report = report_from_curve(curve, g, "sweep", hash);

  std::vector<std::string> files;
  write_output(o.out_dir, "sweep_00_eta_curve.tsv",
               io::format_eta_curve_tsv(curve, hash), files);
  io::write_text_file((fs::path(o.out_dir) / "run.json").string(),
                      io::format_report_json(report));
  std::printf("sweep: %d/%d valid points, g_sign %+d, outputs in %s\n",
              report.valid_points, report.total_points, report.g_sign,
              o.out_dir.c_str());
  return 0;
}

int cmd_magic_field(const CommonOptions& o, const std::string& grid_spec) {
  LoadedConfig c = load_common(o, "magic-field");
  std::string spec = grid_spec;
  if (spec.empty()) {
    const double expected_nt = -c.sensor.light_shift_tesla * 1e9;
    spec = fmt_g(expected_nt - 20.0) + ":1:" + fmt_g(expected_nt + 20.0);
  }
  c.canonical += "bz_grid " + spec + "\n";
  const std::string hash = io::hash_hex(c.canonical);

  std::vector<double> grid;
  for (double nt : parse_grid_nt(spec)) grid.push_back(nt * 1e-9);

  const EtaCurve curve =
      eta_sweep(c.molecule, c.sensor, c.coupling, c.acq, grid, c.pol);
  require_valid_points(curve);

  std::vector<CrossPoint> roots;
  try {
    roots = find_cross_points(curve);
  } catch (const std::runtime_error&) {
    roots.clear();
  }
  const double expected = -c.sensor.light_shift_tesla;
  std::optional<CrossPoint> magic;
  for (const auto& cp : roots) {
    if (cp.trivial) continue;
    if (!magic || std::abs(cp.bz_tesla - expected) < std::abs(magic->bz_tesla - expected))
      magic = cp;
  }
  if (!magic)
    throw std::runtime_error("no nontrivial cross point in the swept range");

  const GSignResult g = infer_g_sign(curve);
  io::AnalysisReport report = report_from_curve(curve, g, "magic-field", hash);
  report.cross_points = roots;
  report.has_magic_field_estimate = true;
  report.magic_field_estimate_tesla = magic->bz_tesla;

  std::vector<std::string> files;
  write_output(o.out_dir, "magic-field_00_eta_curve.tsv",
               io::format_eta_curve_tsv(curve, hash), files);
  io::write_text_file((fs::path(o.out_dir) / "run.json").string(),
                      io::format_report_json(report));
  std::printf("magic-field: estimate %s nT, outputs in %s\n",
              fmt_g(magic->bz_tesla * 1e9).c_str(), o.out_dir.c_str());
  return 0;
}

int cmd_light_shift(const CommonOptions& o, const std::string& powers_spec,
                    double alpha_nt_per_mw, double halfwidth_nt, double step_nt) {
  LoadedConfig c = load_common(o, "light-shift");
  c.canonical += "powers " + powers_spec + "\n";
  c.canonical += "alpha " + fmt_g(alpha_nt_per_mw) + "\n";
  c.canonical += "grid_halfwidth_nt " + fmt_g(halfwidth_nt) + "\n";
  c.canonical += "grid_step_nt " + fmt_g(step_nt) + "\n";
  const std::string hash = io::hash_hex(c.canonical);

  const std::vector<double> powers = parse_number_list(powers_spec, "powers");
  if (!(step_nt > 0.0) || !(halfwidth_nt > 0.0))
    throw std::invalid_argument("grid halfwidth and step must be positive");

  std::vector<std::pair<double, double>> points;  // (mW, nT)
  std::vector<std::string> files;
  std::string curve_name_base = "light-shift_";
  int seq = 1;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    SensorModel sensor = c.sensor;
    sensor.light_shift_tesla = alpha_nt_per_mw * powers[i] * 1e-9;
    const double expected_nt = -alpha_nt_per_mw * powers[i];
    std::vector<double> grid;
    for (double nt = expected_nt - halfwidth_nt; nt <= expected_nt + halfwidth_nt + 1e-9;
         nt += step_nt)
      grid.push_back(nt * 1e-9);

    const EtaCurve curve = eta_sweep(c.molecule, sensor, c.coupling, c.acq, grid, c.pol);
    std::vector<CrossPoint> roots;
    try {
      roots = find_cross_points(curve);
    } catch (const std::runtime_error&) {
      roots.clear();
    }
    std::optional<double> magic;
    for (const auto& cp : roots) {
      if (cp.trivial) continue;
      if (!magic ||
          std::abs(cp.bz_tesla * 1e9 - expected_nt) < std::abs(*magic - expected_nt))
        magic = cp.bz_tesla * 1e9;
    }
    if (!magic)
      throw std::runtime_error("no nontrivial cross point at pump power " +
                               fmt_g(powers[i]) + " mW");
    points.emplace_back(powers[i], *magic);

    char name[64];
    std::snprintf(name, sizeof name, "%s%02d_curve_p%02d.tsv", curve_name_base.c_str(),
                  seq++, static_cast<int>(i));
    write_output(o.out_dir, name, io::format_eta_curve_tsv(curve, hash), files);
  }

  const LineFit fit = light_shift_from_power(points);

  std::string pts;
  pts += "# zulfasym power_points\n";
  pts += "# config " + hash + "\n";
  pts += "power_mw\tmagic_field_nt\n";
  for (const auto& [p, b] : points) pts += fmt_g(p) + "\t" + fmt_g(b) + "\n";
  write_output(o.out_dir, "light-shift_00_power_points.tsv", pts, files);

  io::AnalysisReport report;
  report.command = "light-shift";
  report.config_hash = hash;
  report.molecule_name = c.molecule.name;
  report.total_points = static_cast<int>(points.size());
  report.valid_points = static_cast<int>(points.size());
  report.has_light_shift_fit = true;
  report.light_shift_fit = fit;
  report.alpha_recovered_nt_per_mw = -fit.slope;
  io::write_text_file((fs::path(o.out_dir) / "run.json").string(),
                      io::format_report_json(report));
  std::printf("light-shift: alpha %s nT/mW (configured %s), outputs in %s\n",
              fmt_g(-fit.slope).c_str(), fmt_g(alpha_nt_per_mw).c_str(),
              o.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ultralow-field NMR asymmetric-spectrum toolkit"};
  app.require_subcommand(1);

  CommonOptions sim_o, sweep_o, magic_o, light_o;
  double sim_bz_nt = 0.0;
  std::string sim_window = "none";
  double sim_noise = 0.0;
  std::string sweep_grid, magic_grid;
  std::string light_powers;
  double light_alpha = 0.0;
  double light_halfwidth = 20.0, light_step = 1.0;

  CLI::App* sim = app.add_subcommand(
      "simulate", "time series, spectra and line table at one bias field");
  add_common(sim, sim_o, "zulfasym_runs/simulate");
  sim->add_option("--bz", sim_bz_nt, "bias field, nT")->required();
  sim->add_option("--window", sim_window, "spectral window: none or exp-match")
      ->check(CLI::IsMember({"none", "exp-match"}));
  sim->add_option("--noise", sim_noise, "additive white noise sigma, signal units");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "asymmetry ratio over a bias-field grid plus sign inference");
  add_common(sweep, sweep_o, "zulfasym_runs/sweep");
  sweep->add_option("--bz-grid", sweep_grid, "nT grid, lo:step:hi or comma list")
      ->required();

  CLI::App* magic = app.add_subcommand(
      "magic-field", "locate the bias field that restores a symmetric doublet");
  add_common(magic, magic_o, "zulfasym_runs/magic-field");
  magic->add_option("--bz-grid", magic_grid,
                    "nT grid (default: 20 nT around the expected magic field)");

  CLI::App* light = app.add_subcommand(
      "light-shift", "per-power magic fields and the light-shift line fit");
  add_common(light, light_o, "zulfasym_runs/light-shift");
  light->add_option("--powers", light_powers, "pump powers, mW, comma list")->required();
  light->add_option("--alpha", light_alpha, "light shift per pump power, nT/mW")
      ->required();
  light->add_option("--grid-halfwidth-nt", light_halfwidth,
                    "half width of each per-power search grid, nT");
  light->add_option("--grid-step-nt", light_step, "step of each per-power grid, nT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o, sim_bz_nt, sim_window, sim_noise);
    if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_grid);
    if (magic->parsed()) return cmd_magic_field(magic_o, magic_grid);
    if (light->parsed())
      return cmd_light_shift(light_o, light_powers, light_alpha, light_halfwidth,
                             light_step);
    std::fprintf(stderr, "error: no command selected\n");
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
