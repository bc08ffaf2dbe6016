#include "zulf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace zulf::io {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find('#');
  return trim(pos == std::string::npos ? s : s.substr(0, pos));
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double to_double(const std::string& tok, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw std::invalid_argument(context + ": not a number: '" + tok + "'");
  return v;
}

// header comments: "# key rest of line"; data starts at the first plain line
struct TaggedText {
  std::vector<std::pair<std::string, std::string>> tags;
  std::vector<std::string> rows;  // first row is the column header

  std::optional<std::string> tag(const std::string& key) const {
    for (const auto& [k, v] : tags)
      if (k == key) return v;
    return std::nullopt;
  }
};

TaggedText scan_tsv(const std::string& text) {
  TaggedText out;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    if (raw.front() == '#') {
      std::string body = trim(raw.substr(1));
      const auto sp = body.find(' ');
      if (sp == std::string::npos) out.tags.emplace_back(body, "");
      else out.tags.emplace_back(body.substr(0, sp), body.substr(sp + 1));
      continue;
    }
    out.rows.push_back(raw);
  }
  return out;
}

void require_header(const TaggedText& t, const std::string& expected,
                    const std::string& what) {
  if (t.rows.empty() || t.rows.front() != expected)
    throw std::invalid_argument(what + ": column header mismatch, expected '" +
                                expected + "'");
}

double tag_number(const TaggedText& t, const std::string& key, const std::string& what) {
  const auto v = t.tag(key);
  if (!v) throw std::invalid_argument(what + ": missing '# " + key + "' header");
  return to_double(trim(*v), what + " header " + key);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::string_view text) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string resolve_data_file(const std::string& ref, const std::string& kind) {
  namespace fs = std::filesystem;
  if (fs::exists(ref)) return ref;

  std::string leaf = ref;
  if (leaf.find('.') == std::string::npos)
    leaf += kind == "molecules" ? ".mol" : ".sensor";

  std::vector<fs::path> roots;
  if (const char* env = std::getenv("ZULFASYM_DATA_DIR")) roots.emplace_back(env);
#ifdef ZULF_SOURCE_DATA_DIR
  roots.emplace_back(ZULF_SOURCE_DATA_DIR);
#endif
  for (const auto& root : roots) {
    for (const auto& p : {root / kind / leaf, root / leaf})
      if (fs::exists(p)) return p.string();
  }
  throw std::invalid_argument("cannot resolve " + kind + " file '" + ref + "'");
}

MoleculeSpec parse_molecule_text(const std::string& text, const std::string& origin) {
  const std::string where = "molecule file " + origin + ": ";
  MoleculeSpec m;
  enum class Sec { head, nuclei, couplings };
  Sec sec = Sec::head;
  bool saw_nuclei = false, saw_couplings = false;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[nuclei]") {
        sec = Sec::nuclei;
        saw_nuclei = true;
      } else if (line == "[j_couplings_hz]") {
        sec = Sec::couplings;
        saw_couplings = true;
      } else {
        throw std::invalid_argument(where + "unknown section " + line);
      }
      continue;
    }
    const auto tok = split_ws(line);
    switch (sec) {
      case Sec::head: {
        if (tok.size() == 2 && tok[0] == "name") {
          m.name = tok[1];
        } else {
          throw std::invalid_argument(
              where + "unrecognized entry before the first section: '" + line + "'");
        }
        break;
      }
      case Sec::nuclei: {
        if (tok.size() != 2 && tok.size() != 3)
          throw std::invalid_argument(where + "bad row in [nuclei]: '" + line + "'");
        Nucleus n;
        n.site = tok[0];
        n.isotope = tok[1];
        if (m.site_index(n.site) >= 0)
          throw std::invalid_argument(where + "duplicate site '" + n.site +
                                      "' in [nuclei]");
        try {
          n.gamma = tok.size() == 3
                        ? to_double(tok[2], where + "[nuclei] gamma for " + n.site)
                        : gamma_of_isotope(n.isotope);
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument(where + e.what());
        }
        m.nuclei.push_back(n);
        break;
      }
      case Sec::couplings: {
        if (tok.size() != 3)
          throw std::invalid_argument(where + "bad row in [j_couplings_hz]: '" +
                                      line + "'");
        const int a = m.site_index(tok[0]);
        const int b = m.site_index(tok[1]);
        if (a < 0)
          throw std::invalid_argument(where + "unknown site '" + tok[0] +
                                      "' in [j_couplings_hz]");
        if (b < 0)
          throw std::invalid_argument(where + "unknown site '" + tok[1] +
                                      "' in [j_couplings_hz]");
        if (a == b)
          throw std::invalid_argument(where + "site '" + tok[0] +
                                      "' coupled to itself");
        const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
        if (m.j_couplings_hz.count(key))
          throw std::invalid_argument(where + "duplicate coupling " + tok[0] + " " +
                                      tok[1]);
        m.set_j(a, b, to_double(tok[2], where + "[j_couplings_hz] value"));
        break;
      }
    }
  }
  if (!saw_nuclei) throw std::invalid_argument(where + "missing [nuclei] section");
  if (m.nuclei.empty()) throw std::invalid_argument(where + "empty [nuclei] section");
  if (m.name.empty()) throw std::invalid_argument(where + "missing name entry");
  if (!saw_couplings)
    throw std::invalid_argument(where + "missing [j_couplings_hz] section");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + e.what());
  }
  return m;
}

MoleculeSpec read_molecule_file(const std::string& path) {
  return parse_molecule_text(read_text_file(path), path);
}

SensorModel parse_sensor_text(const std::string& text, const std::string& origin) {
  const std::string where = "sensor file " + origin + ": ";
  enum class Sec { head, response, operating };
  Sec sec = Sec::head;
  std::optional<double> gamma_eff, gamma_e, q, gamma_relax, p0;
  std::optional<double> light_nt, alpha, power, bias_nt;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[response]") sec = Sec::response;
      else if (line == "[operating_point]") sec = Sec::operating;
      else throw std::invalid_argument(where + "unknown section " + line);
      continue;
    }
    const auto tok = split_ws(line);
    if (tok.size() != 2)
      throw std::invalid_argument(where + "bad row: '" + line + "'");
    const std::string& key = tok[0];
    if (sec == Sec::head) {
      if (key == "name") continue;
      throw std::invalid_argument(where + "unrecognized entry before the first section: '" +
                                  line + "'");
    }
    const double v = to_double(tok[1], where + key);
    if (sec == Sec::response) {
      if (key == "gamma_eff") gamma_eff = v;
      else if (key == "gamma_e") gamma_e = v;
      else if (key == "q") q = v;
      else if (key == "gamma_relax_rad_s") gamma_relax = v;
      else if (key == "p0") p0 = v;
      else throw std::invalid_argument(where + "unknown key '" + key + "' in [response]");
    } else {
      if (key == "light_shift_nt") light_nt = v;
      else if (key == "alpha_nt_per_mw") alpha = v;
      else if (key == "pump_power_mw") power = v;
      else if (key == "bias_nt") bias_nt = v;
      else throw std::invalid_argument(where + "unknown key '" + key +
                                       "' in [operating_point]");
    }
  }

  SensorModel s;
  if (gamma_eff && (gamma_e || q))
    throw std::invalid_argument(where + "give either gamma_eff or gamma_e with q, not both");
  if (gamma_e.has_value() != q.has_value())
    throw std::invalid_argument(where + "gamma_e and q must come together");
  if (gamma_eff) s.gamma_eff = *gamma_eff;
  if (gamma_e) {
    if (*q <= 0.0) throw std::invalid_argument(where + "q must be positive");
    s.gamma_eff = *gamma_e / *q;
  }
  if (gamma_relax) s.gamma_relax = *gamma_relax;
  if (p0) s.p0 = *p0;
  if (light_nt && alpha)
    throw std::invalid_argument(
        where + "give either light_shift_nt or alpha_nt_per_mw with pump_power_mw, not both");
  if (alpha.has_value() != power.has_value())
    throw std::invalid_argument(where + "alpha_nt_per_mw and pump_power_mw must come together");
  if (light_nt) s.light_shift_tesla = *light_nt * 1e-9;
  if (alpha) s.light_shift_tesla = (*alpha) * (*power) * 1e-9;
  if (bias_nt) s.bias_bz_tesla = *bias_nt * 1e-9;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + e.what());
  }
  return s;
}

SensorModel read_sensor_file(const std::string& path) {
  return parse_sensor_text(read_text_file(path), path);
}

std::string format_time_series_tsv(const TimeSeries& ts, const std::string& config_hash) {
  std::string out;
  out += "# zulfasym time_series\n";
  out += "# config " + config_hash + "\n";
  out += "# rate_hz " + fmt_g(ts.sample_rate_hz) + "\n";
  out += "t_s\tsignal\n";
  for (std::size_t i = 0; i < ts.samples.size(); ++i) {
    out += fmt_g(static_cast<double>(i) / ts.sample_rate_hz);
    out += '\t';
    out += fmt_g(ts.samples[i]);
    out += '\n';
  }
  return out;
}

TimeSeries parse_time_series_tsv(const std::string& text) {
  const auto t = scan_tsv(text);
  require_header(t, "t_s\tsignal", "time series");
  TimeSeries ts;
  ts.sample_rate_hz = tag_number(t, "rate_hz", "time series");
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto f = split_tabs(t.rows[i]);
    if (f.size() != 2)
      throw std::invalid_argument("time series: bad row: '" + t.rows[i] + "'");
    ts.samples.push_back(to_double(f[1], "time series value"));
  }
  return ts;
}

std::string format_spectrum_tsv(const Spectrum& sp, const std::string& config_hash) {
  std::string out;
  out += "# zulfasym spectrum\n";
  out += "# config " + config_hash + "\n";
  out += "# provenance " + sp.provenance + "\n";
  if (!sp.config_note.empty()) out += "# note " + sp.config_note + "\n";
  out += "freq_hz\tre\tim\tmagnitude\n";
  for (std::size_t i = 0; i < sp.grid_hz.size(); ++i) {
    out += fmt_g(sp.grid_hz[i]);
    out += '\t';
    out += fmt_g(sp.values[i].real());
    out += '\t';
    out += fmt_g(sp.values[i].imag());
    out += '\t';
    out += fmt_g(std::abs(sp.values[i]));
    out += '\n';
  }
  return out;
}

Spectrum parse_spectrum_tsv(const std::string& text) {
  const auto t = scan_tsv(text);
  require_header(t, "freq_hz\tre\tim\tmagnitude", "spectrum");
  Spectrum sp;
  sp.provenance = trim(t.tag("provenance").value_or(""));
  sp.config_note = trim(t.tag("note").value_or(""));
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto f = split_tabs(t.rows[i]);
    if (f.size() != 4)
      throw std::invalid_argument("spectrum: bad row: '" + t.rows[i] + "'");
    sp.grid_hz.push_back(to_double(f[0], "spectrum freq"));
    sp.values.emplace_back(to_double(f[1], "spectrum re"),
                           to_double(f[2], "spectrum im"));
  }
  return sp;
}

std::string format_line_table_tsv(const SensorLineSet& lines,
                                  const std::string& config_hash) {
  std::string out;
  out += "# zulfasym lines\n";
  out += "# config " + config_hash + "\n";
  out += "freq_hz\tre\tim\tbra\tket\n";
  for (const auto& l : lines.lines) {
    out += fmt_g(l.frequency_hz);
    out += '\t';
    out += fmt_g(l.signal.real());
    out += '\t';
    out += fmt_g(l.signal.imag());
    out += '\t';
    out += l.bra_label;
    out += '\t';
    out += l.ket_label;
    out += '\n';
  }
  return out;
}

SensorLineSet parse_line_table_tsv(const std::string& text) {
  const auto t = scan_tsv(text);
  require_header(t, "freq_hz\tre\tim\tbra\tket", "line table");
  SensorLineSet ls;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto f = split_tabs(t.rows[i]);
    if (f.size() != 5)
      throw std::invalid_argument("line table: bad row: '" + t.rows[i] + "'");
    SensorLine l;
    l.frequency_hz = to_double(f[0], "line freq");
    l.signal = Complex(to_double(f[1], "line re"), to_double(f[2], "line im"));
    l.bra_label = f[3];
    l.ket_label = f[4];
    ls.lines.push_back(std::move(l));
  }
  return ls;
}

std::string format_eta_curve_tsv(const EtaCurve& curve, const std::string& config_hash) {
  std::string out;
  out += "# zulfasym eta_curve\n";
  out += "# config " + config_hash + "\n";
  if (!curve.molecule_name.empty()) out += "# molecule " + curve.molecule_name + "\n";
  out += "# center_hz " + fmt_g(curve.center_hz) + "\n";
  out += "# t2_s " + fmt_g(curve.t2_s) + "\n";
  out += "# kappa " + fmt_g(curve.kappa) + "\n";
  out += "# light_shift_nt " + fmt_g(curve.light_shift_tesla * 1e9) + "\n";
  for (const auto& p : curve.points)
    if (!p.valid)
      out += "# invalid " + fmt_g(p.bz_tesla * 1e9) + " " + p.reason + "\n";
  out += "Bz_nT\teta\tamp1\tamp2\tvalid\n";
  for (const auto& p : curve.points) {
    out += fmt_g(p.bz_tesla * 1e9);
    out += '\t';
    if (p.valid) {
      out += fmt_g(p.eta);
      out += '\t';
      out += fmt_g(p.amp_low);
      out += '\t';
      out += fmt_g(p.amp_high);
      out += "\t1\n";
    } else {
      out += "nan\tnan\tnan\t0\n";
    }
  }
  return out;
}

EtaCurve parse_eta_curve_tsv(const std::string& text) {
  const auto t = scan_tsv(text);
  require_header(t, "Bz_nT\teta\tamp1\tamp2\tvalid", "eta curve");
  EtaCurve curve;
  curve.molecule_name = trim(t.tag("molecule").value_or(""));
  curve.center_hz = tag_number(t, "center_hz", "eta curve");
  curve.t2_s = tag_number(t, "t2_s", "eta curve");
  curve.kappa = tag_number(t, "kappa", "eta curve");
  curve.light_shift_tesla = tag_number(t, "light_shift_nt", "eta curve") * 1e-9;

  std::vector<std::pair<double, std::string>> reasons;
  for (const auto& [k, v] : t.tags) {
    if (k != "invalid") continue;
    const std::string body = trim(v);
    const auto sp = body.find(' ');
    const std::string bz_tok = sp == std::string::npos ? body : body.substr(0, sp);
    const std::string reason = sp == std::string::npos ? "" : trim(body.substr(sp + 1));
    reasons.emplace_back(to_double(bz_tok, "eta curve invalid tag"), reason);
  }

  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto f = split_tabs(t.rows[i]);
    if (f.size() != 5)
      throw std::invalid_argument("eta curve: bad row: '" + t.rows[i] + "'");
    EtaPoint p;
    const double bz_nt = to_double(f[0], "eta curve Bz");
    p.bz_tesla = bz_nt * 1e-9;
    p.valid = f[4] == "1";
    if (p.valid) {
      p.eta = to_double(f[1], "eta curve eta");
      p.amp_low = to_double(f[2], "eta curve amp1");
      p.amp_high = to_double(f[3], "eta curve amp2");
    } else {
      for (auto& [bz, reason] : reasons) {
        if (bz == bz_nt && !reason.empty()) {
          p.reason = reason;
          reason.clear();
          break;
        }
      }
      if (p.reason.empty()) p.reason = "recorded as invalid";
    }
    curve.points.push_back(std::move(p));
  }
  return curve;
}

std::string format_report_json(const AnalysisReport& r) {
  nlohmann::json j;
  j["command"] = r.command;
  j["config_hash"] = r.config_hash;
  j["molecule"] = r.molecule_name;
  j["center_hz"] = r.center_hz;
  j["total_points"] = r.total_points;
  j["valid_points"] = r.valid_points;
  auto cps = nlohmann::json::array();
  for (const auto& c : r.cross_points)
    cps.push_back({{"bz_nt", c.bz_tesla * 1e9}, {"trivial", c.trivial}});
  j["cross_points"] = cps;
  if (r.has_magic_field_estimate)
    j["magic_field_estimate_nt"] = r.magic_field_estimate_tesla * 1e9;
  else
    j["magic_field_estimate_nt"] = nullptr;
  j["g_sign"] = r.g_sign;
  j["g_note"] = r.g_note;
  auto regs = nlohmann::json::array();
  for (int i = 0; i < 3; ++i)
    regs.push_back({{"sign", r.regions[i].sign},
                    {"points", r.regions[i].points},
                    {"agreement", r.regions[i].agreement}});
  j["regions"] = regs;
  if (r.has_light_shift_fit)
    j["light_shift_fit"] = {{"slope_nt_per_mw", r.light_shift_fit.slope},
                            {"intercept_nt", r.light_shift_fit.intercept},
                            {"residual_nt", r.light_shift_fit.residual},
                            {"alpha_recovered_nt_per_mw", r.alpha_recovered_nt_per_mw}};
  else
    j["light_shift_fit"] = nullptr;
  return j.dump(2) + "\n";
}

AnalysisReport parse_report_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("report: bad json: ") + e.what());
  }
  try {
    AnalysisReport r;
    r.command = j.at("command").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.molecule_name = j.at("molecule").get<std::string>();
    r.center_hz = j.at("center_hz").get<double>();
    r.total_points = j.at("total_points").get<int>();
    r.valid_points = j.at("valid_points").get<int>();
    for (const auto& c : j.at("cross_points")) {
      CrossPoint cp;
      cp.bz_tesla = c.at("bz_nt").get<double>() * 1e-9;
      cp.trivial = c.at("trivial").get<bool>();
      r.cross_points.push_back(cp);
    }
    if (!j.at("magic_field_estimate_nt").is_null()) {
      r.has_magic_field_estimate = true;
      r.magic_field_estimate_tesla =
          j.at("magic_field_estimate_nt").get<double>() * 1e-9;
    }
    r.g_sign = j.at("g_sign").get<int>();
    r.g_note = j.at("g_note").get<std::string>();
    const auto& regs = j.at("regions");
    if (regs.size() != 3)
      throw std::invalid_argument("report: expected three regions");
    for (int i = 0; i < 3; ++i) {
      r.regions[i].sign = regs[i].at("sign").get<int>();
      r.regions[i].points = regs[i].at("points").get<int>();
      r.regions[i].agreement = regs[i].at("agreement").get<double>();
    }
    if (!j.at("light_shift_fit").is_null()) {
      const auto& f = j.at("light_shift_fit");
      r.has_light_shift_fit = true;
      r.light_shift_fit.slope = f.at("slope_nt_per_mw").get<double>();
      r.light_shift_fit.intercept = f.at("intercept_nt").get<double>();
      r.light_shift_fit.residual = f.at("residual_nt").get<double>();
      r.alpha_recovered_nt_per_mw = f.at("alpha_recovered_nt_per_mw").get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("report: missing or mistyped field: ") +
                                e.what());
  }
}

}  // namespace zulf::io
