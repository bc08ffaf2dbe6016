#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "zulf/constants.hpp"
#include "zulf/io.hpp"

using namespace zulf;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir() {
  static const std::string dir = [] {
    const auto d = fs::temp_directory_path() /
                   ("zulf_io_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d.string();
  }();
  return dir;
}

template <typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& msg, const std::string& needle) {
  return msg.find(needle) != std::string::npos;
}

#ifdef ZULF_CLI_BINARY
int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd =
      std::string(ZULF_CLI_BINARY) + " " + args + " >" + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}
#endif

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("molecule files parse with table lookups and overrides") {
  const std::string text =
      "# heteronuclear demo\n"
      "name demo\n"
      "\n"
      "[nuclei]\n"
      "C1 13C\n"
      "H1 1H\n"
      "F1 19F 2.5e8\n"
      "\n"
      "[j_couplings_hz]\n"
      "C1 H1 222.2\n"
      "C1 F1 10.5\n";
  const auto m = io::parse_molecule_text(text, "inline");
  CHECK(m.name == "demo");
  REQUIRE(m.size() == 3);
  CHECK(m.nuclei[0].site == "C1");
  CHECK(m.nuclei[0].gamma == doctest::Approx(constants::gamma_13c).epsilon(1e-15));
  CHECK(m.nuclei[1].gamma == doctest::Approx(constants::gamma_1h).epsilon(1e-15));
  CHECK(m.nuclei[2].gamma == 2.5e8);
  CHECK(m.j(0, 1) == 222.2);
  CHECK(m.j(0, 2) == 10.5);
  CHECK(m.j(1, 2) == 0.0);
}

TEST_CASE("molecule parse errors name the offending section") {
  auto parse = [](const std::string& t) { return io::parse_molecule_text(t, "t"); };

  CHECK(mentions(thrown_message([&] { parse(""); }), "missing [nuclei] section"));
  CHECK(mentions(thrown_message([&] { parse("name x\n"); }),
                 "missing [nuclei] section"));
  CHECK(mentions(thrown_message([&] { parse("name x\n[nuclei]\n"); }),
                 "empty [nuclei] section"));
  CHECK(mentions(
      thrown_message([&] { parse("[nuclei]\nH1 1H\n[j_couplings_hz]\n"); }),
      "missing name entry"));
  CHECK(mentions(thrown_message([&] { parse("name x\n[nuclei]\nH1 1H\n"); }),
                 "missing [j_couplings_hz] section"));
  CHECK(mentions(thrown_message([&] { parse("name x\n[stuff]\n"); }),
                 "unknown section [stuff]"));
  CHECK(mentions(
      thrown_message([&] { parse("name x\n[nuclei]\nH1 1H\nH1 1H\n"); }),
      "duplicate site 'H1'"));
  CHECK(mentions(
      thrown_message([&] { parse("name x\n[nuclei]\nQ1 7Q\n"); }), "7Q"));
  CHECK(mentions(thrown_message([&] {
                   parse("name x\n[nuclei]\nH1 1H\n[j_couplings_hz]\nH1 H2 5\n");
                 }),
                 "unknown site 'H2'"));
  CHECK(mentions(thrown_message([&] {
                   parse("name x\n[nuclei]\nH1 1H\n[j_couplings_hz]\nH1 H1 5\n");
                 }),
                 "coupled to itself"));
  CHECK(mentions(
      thrown_message([&] {
        parse(
            "name x\n[nuclei]\nC1 13C\nH1 1H\n[j_couplings_hz]\nC1 H1 5\nH1 C1 6\n");
      }),
      "duplicate coupling"));
  CHECK(mentions(thrown_message([&] {
                   parse("name x\n[nuclei]\nH1 1H extra fields here\n");
                 }),
                 "bad row in [nuclei]"));
  CHECK_THROWS_AS(parse(""), std::invalid_argument);
}

TEST_CASE("sensor files parse in both parameterizations") {
  const auto direct = io::parse_sensor_text(
      "name s\n[response]\ngamma_eff 2.9e10\ngamma_relax_rad_s 100\np0 0.4\n"
      "[operating_point]\nlight_shift_nt -43.7\nbias_nt 2\n",
      "inline");
  CHECK(direct.gamma_eff == 2.9e10);
  CHECK(direct.gamma_relax == 100.0);
  CHECK(direct.p0 == 0.4);
  CHECK(direct.light_shift_tesla == doctest::Approx(-43.7e-9).epsilon(1e-15));
  CHECK(direct.bias_bz_tesla == doctest::Approx(2e-9).epsilon(1e-15));

  const auto derived = io::parse_sensor_text(
      "[response]\ngamma_e 1.760859630e11\nq 6\n"
      "[operating_point]\nalpha_nt_per_mw -0.5\npump_power_mw 20\n",
      "inline");
  CHECK(derived.gamma_eff ==
        doctest::Approx(constants::gamma_electron / 6.0).epsilon(1e-15));
  CHECK(derived.light_shift_tesla == doctest::Approx(-10e-9).epsilon(1e-15));

  const auto empty = io::parse_sensor_text("", "inline");
  CHECK(empty.gamma_eff ==
        doctest::Approx(constants::gamma_electron / 6.0).epsilon(1e-15));
  CHECK(empty.light_shift_tesla == 0.0);
}

TEST_CASE("sensor parse errors name the offending key") {
  auto parse = [](const std::string& t) { return io::parse_sensor_text(t, "t"); };
  CHECK(mentions(thrown_message([&] {
                   parse("[response]\ngamma_eff 1e10\ngamma_e 1e11\nq 4\n");
                 }),
                 "not both"));
  CHECK(mentions(thrown_message([&] { parse("[response]\ngamma_e 1e11\n"); }),
                 "gamma_e and q must come together"));
  CHECK(mentions(thrown_message([&] {
                   parse("[operating_point]\nlight_shift_nt 1\nalpha_nt_per_mw 2\n"
                         "pump_power_mw 3\n");
                 }),
                 "not both"));
  CHECK(mentions(thrown_message([&] { parse("[response]\nwhatever 3\n"); }),
                 "unknown key 'whatever' in [response]"));
  CHECK(mentions(thrown_message([&] { parse("[nope]\n"); }),
                 "unknown section [nope]"));
  CHECK(mentions(thrown_message([&] { parse("stray line\n"); }),
                 "before the first section"));
}

TEST_CASE("shipped data files resolve and parse") {
  setenv("ZULFASYM_DATA_DIR", ZULF_SOURCE_DATA_DIR, 1);
  const auto m = io::read_molecule_file(
      io::resolve_data_file("formic_acid", "molecules"));
  CHECK(m.name == "formic_acid");
  REQUIRE(m.size() == 2);
  CHECK(m.j(0, 1) == 222.2);

  for (const char* name :
       {"acetic_acid", "formaldehyde", "acetonitrile_template"}) {
    const auto mol =
        io::read_molecule_file(io::resolve_data_file(name, "molecules"));
    CHECK(mol.name == name);
    CHECK(mol.size() >= 3);
  }

  const auto s = io::read_sensor_file(
      io::resolve_data_file("shifted_pump", "sensors"));
  CHECK(s.light_shift_tesla == doctest::Approx(-43.7e-9).epsilon(1e-15));
  CHECK(s.gamma_eff ==
        doctest::Approx(constants::gamma_electron / 6.0).epsilon(1e-15));

  CHECK_THROWS_AS(io::resolve_data_file("no_such_thing", "molecules"),
                  std::invalid_argument);

  // an explicit path wins over the search roots
  const std::string local = scratch_dir() + "/local.mol";
  io::write_text_file(local,
                      "name local\n[nuclei]\nH1 1H\n[j_couplings_hz]\n");
  CHECK(io::resolve_data_file(local, "molecules") == local);
}

TEST_CASE("time series and spectrum round trip through text") {
  io::TimeSeries ts;
  ts.sample_rate_hz = 2000.0;
  ts.samples = {0.0, 1.5e-7, -2.25e-9, 3.0625e-13};
  const std::string text = io::format_time_series_tsv(ts, "deadbeef");
  const auto back = io::parse_time_series_tsv(text);
  CHECK(back.sample_rate_hz == ts.sample_rate_hz);
  REQUIRE(back.samples.size() == ts.samples.size());
  for (std::size_t i = 0; i < ts.samples.size(); ++i)
    CHECK(back.samples[i] == ts.samples[i]);
  CHECK(io::format_time_series_tsv(back, "deadbeef") == text);

  Spectrum sp;
  sp.grid_hz = {220.0, 221.5, 223.0};
  sp.values = {{1e-3, -2e-4}, {0.0, 5.5}, {-3.25e-6, 0.0}};
  sp.provenance = "fft";
  sp.config_note = "window=none";
  const std::string sp_text = io::format_spectrum_tsv(sp, "deadbeef");
  const auto sp_back = io::parse_spectrum_tsv(sp_text);
  CHECK(sp_back.provenance == "fft");
  CHECK(sp_back.config_note == "window=none");
  REQUIRE(sp_back.grid_hz.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sp_back.grid_hz[i] == sp.grid_hz[i]);
    CHECK(sp_back.values[i] == sp.values[i]);
  }
  CHECK(io::format_spectrum_tsv(sp_back, "deadbeef") == sp_text);
}

TEST_CASE("line tables round trip including empty and spaced labels") {
  SensorLineSet ls;
  ls.lines.push_back({222.2, Complex(1e-7, -2e-7), "k=1/2 |1,+1>", "k=1/2 |0,0>"});
  ls.lines.push_back({0.77, Complex(0.0, 3e-6), "", ""});
  const std::string text = io::format_line_table_tsv(ls, "deadbeef");
  const auto back = io::parse_line_table_tsv(text);
  REQUIRE(back.lines.size() == 2);
  CHECK(back.lines[0].frequency_hz == 222.2);
  CHECK(back.lines[0].signal == ls.lines[0].signal);
  CHECK(back.lines[0].bra_label == "k=1/2 |1,+1>");
  CHECK(back.lines[0].ket_label == "k=1/2 |0,0>");
  CHECK(back.lines[1].bra_label.empty());
  CHECK(io::format_line_table_tsv(back, "deadbeef") == text);
}

TEST_CASE("eta curves round trip with failure reasons intact") {
  EtaCurve curve;
  curve.molecule_name = "demo";
  curve.center_hz = 222.2;
  curve.t2_s = 3.0;
  curve.kappa = 0.7;
  curve.light_shift_tesla = -43.7e-9;
  EtaPoint a;
  a.bz_tesla = -2e-8;
  a.eta = -0.25;
  a.amp_low = 1.5e-7;
  a.amp_high = 2.5e-7;
  a.valid = true;
  EtaPoint bad;
  bad.bz_tesla = 0.0;
  bad.valid = false;
  bad.reason = "doublet merged at this field";
  EtaPoint b;
  b.bz_tesla = 2.9e-8;
  b.eta = 0.4;
  b.amp_low = 3e-7;
  b.amp_high = 1.2e-7;
  b.valid = true;
  curve.points = {a, bad, b};

  const std::string text = io::format_eta_curve_tsv(curve, "deadbeef");
  const auto back = io::parse_eta_curve_tsv(text);
  CHECK(back.molecule_name == "demo");
  CHECK(back.center_hz == 222.2);
  CHECK(back.t2_s == 3.0);
  CHECK(back.kappa == 0.7);
  CHECK(back.light_shift_tesla == doctest::Approx(-43.7e-9).epsilon(1e-12));
  REQUIRE(back.points.size() == 3);
  CHECK(back.points[0].bz_tesla == doctest::Approx(a.bz_tesla).epsilon(1e-12));
  CHECK(back.points[0].eta == a.eta);
  CHECK(back.points[0].amp_low == a.amp_low);
  CHECK(back.points[0].amp_high == a.amp_high);
  CHECK(back.points[0].valid);
  CHECK_FALSE(back.points[1].valid);
  CHECK(back.points[1].reason == "doublet merged at this field");
  CHECK(back.points[2].valid);

  // the nT columns pass through a unit conversion, so a rewrite is stable
  // only to the last bit of that scaling, not byte for byte
  const auto twice =
      io::parse_eta_curve_tsv(io::format_eta_curve_tsv(back, "deadbeef"));
  REQUIRE(twice.points.size() == 3);
  CHECK(twice.points[0].eta == back.points[0].eta);
  CHECK(twice.points[0].amp_low == back.points[0].amp_low);
  CHECK(twice.points[2].amp_high == back.points[2].amp_high);
  CHECK(twice.points[1].reason == back.points[1].reason);
  CHECK(twice.points[0].bz_tesla ==
        doctest::Approx(back.points[0].bz_tesla).epsilon(1e-15));
  CHECK(twice.light_shift_tesla ==
        doctest::Approx(back.light_shift_tesla).epsilon(1e-15));
}

TEST_CASE("analysis reports round trip through json") {
  io::AnalysisReport r;
  r.command = "sweep";
  r.config_hash = "0123456789abcdef";
  r.molecule_name = "formic_acid";
  r.center_hz = 222.2;
  r.total_points = 51;
  r.valid_points = 49;
  r.cross_points = {{-1.75e-9, true}, {43.487e-9, false}};
  r.has_magic_field_estimate = true;
  r.magic_field_estimate_tesla = 43.487e-9;
  r.g_sign = 1;
  r.g_note = "";
  r.regions[0] = {-1, 24, 1.0};
  r.regions[1] = {1, 5, 1.0};
  r.regions[2] = {-1, 20, 0.95};
  r.has_light_shift_fit = true;
  r.light_shift_fit.slope = 0.993;
  r.light_shift_fit.intercept = 0.05;
  r.light_shift_fit.residual = 5e-4;
  r.alpha_recovered_nt_per_mw = -0.993;

  const std::string text = io::format_report_json(r);
  const auto back = io::parse_report_json(text);
  CHECK(back.command == "sweep");
  CHECK(back.config_hash == r.config_hash);
  CHECK(back.molecule_name == r.molecule_name);
  CHECK(back.center_hz == r.center_hz);
  CHECK(back.total_points == 51);
  CHECK(back.valid_points == 49);
  REQUIRE(back.cross_points.size() == 2);
  CHECK(back.cross_points[0].trivial);
  CHECK_FALSE(back.cross_points[1].trivial);
  CHECK(back.cross_points[1].bz_tesla == doctest::Approx(43.487e-9).epsilon(1e-12));
  CHECK(back.has_magic_field_estimate);
  CHECK(back.g_sign == 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.regions[i].sign == r.regions[i].sign);
    CHECK(back.regions[i].points == r.regions[i].points);
    CHECK(back.regions[i].agreement == r.regions[i].agreement);
  }
  REQUIRE(back.has_light_shift_fit);
  CHECK(back.light_shift_fit.slope == r.light_shift_fit.slope);
  CHECK(back.alpha_recovered_nt_per_mw == r.alpha_recovered_nt_per_mw);

  io::AnalysisReport minimal;
  minimal.command = "magic-field";
  minimal.config_hash = "ffff";
  minimal.g_note = "need exactly two sign changes, found 1";
  const auto min_back = io::parse_report_json(io::format_report_json(minimal));
  CHECK_FALSE(min_back.has_magic_field_estimate);
  CHECK_FALSE(min_back.has_light_shift_fit);
  CHECK(min_back.cross_points.empty());
  CHECK(min_back.g_note == minimal.g_note);

  CHECK_THROWS_AS(io::parse_report_json("{ not json"), std::invalid_argument);
  CHECK_THROWS_AS(io::parse_report_json("{}"), std::invalid_argument);
}

TEST_CASE("provenance hash is stable and content sensitive") {
  CHECK(io::hash_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::hash_hex("a") != io::hash_hex("b"));
  CHECK(io::hash_hex("config v1") != io::hash_hex("config v2"));
}

#ifdef ZULF_CLI_BINARY

TEST_CASE("cli runs end to end and reproduces itself byte for byte") {
  const std::string dir = scratch_dir();

  REQUIRE(run_cli("simulate --molecule formic_acid --bz 29 --light-shift-nt -43.7"
                  " --duration 6 --out " + dir + "/sim",
                  dir + "/sim.log") == 0);
  const auto ts = io::parse_time_series_tsv(
      io::read_text_file(dir + "/sim/simulate_00_time_series.tsv"));
  CHECK(ts.sample_rate_hz == 2000.0);
  CHECK(ts.samples.size() == 12000);
  const auto sp = io::parse_spectrum_tsv(
      io::read_text_file(dir + "/sim/simulate_01_fft_spectrum.tsv"));
  CHECK(sp.provenance == "fft");
  CHECK(sp.grid_hz.size() == ts.samples.size() / 2 + 1);
  const auto an = io::parse_spectrum_tsv(
      io::read_text_file(dir + "/sim/simulate_02_analytic_spectrum.tsv"));
  CHECK(an.provenance == "analytic");
  const auto lines = io::parse_line_table_tsv(
      io::read_text_file(dir + "/sim/simulate_03_lines.tsv"));
  CHECK(lines.lines.size() >= 2);

  const std::string sweep_args =
      "sweep --molecule formic_acid --sensor shifted_pump --bz-grid -200:8:200"
      " --out ";
  REQUIRE(run_cli(sweep_args + dir + "/sw1", dir + "/sw1.log") == 0);
  REQUIRE(run_cli(sweep_args + dir + "/sw2", dir + "/sw2.log") == 0);
  CHECK(io::read_text_file(dir + "/sw1/sweep_00_eta_curve.tsv") ==
        io::read_text_file(dir + "/sw2/sweep_00_eta_curve.tsv"));
  CHECK(io::read_text_file(dir + "/sw1/run.json") ==
        io::read_text_file(dir + "/sw2/run.json"));

  const auto report = io::parse_report_json(
      io::read_text_file(dir + "/sw1/run.json"));
  CHECK(report.command == "sweep");
  CHECK(report.g_sign == 1);
  REQUIRE(report.cross_points.size() == 2);
  CHECK(report.cross_points.front().trivial);
  CHECK_FALSE(report.cross_points.back().trivial);
  CHECK(std::abs(report.cross_points.back().bz_tesla - 43.7e-9) < 5e-10);
  CHECK(report.has_magic_field_estimate);
  const auto curve = io::parse_eta_curve_tsv(
      io::read_text_file(dir + "/sw1/sweep_00_eta_curve.tsv"));
  CHECK(curve.points.size() == 51);
  CHECK(curve.molecule_name == "formic_acid");

  REQUIRE(run_cli("magic-field --molecule formic_acid --sensor shifted_pump"
                  " --out " + dir + "/mf",
                  dir + "/mf.log") == 0);
  const auto mf = io::parse_report_json(io::read_text_file(dir + "/mf/run.json"));
  REQUIRE(mf.has_magic_field_estimate);
  CHECK(std::abs(mf.magic_field_estimate_tesla - 43.7e-9) < 5e-10);

  REQUIRE(run_cli("light-shift --molecule formic_acid --powers 10,20,30"
                  " --alpha -1 --grid-halfwidth-nt 12 --grid-step-nt 2 --out " +
                      dir + "/ls",
                  dir + "/ls.log") == 0);
  const auto lsr = io::parse_report_json(io::read_text_file(dir + "/ls/run.json"));
  REQUIRE(lsr.has_light_shift_fit);
  CHECK(std::abs(lsr.alpha_recovered_nt_per_mw - (-1.0)) < 0.02);
}

TEST_CASE("cli seeds noise deterministically") {
  const std::string dir = scratch_dir();
  const std::string base =
      "simulate --molecule formic_acid --bz 29 --duration 2 --noise 1e-8 ";
  REQUIRE(run_cli(base + "--seed 7 --out " + dir + "/n1", dir + "/n1.log") == 0);
  REQUIRE(run_cli(base + "--seed 7 --out " + dir + "/n2", dir + "/n2.log") == 0);
  REQUIRE(run_cli(base + "--seed 8 --out " + dir + "/n3", dir + "/n3.log") == 0);
  const auto t1 = io::read_text_file(dir + "/n1/simulate_00_time_series.tsv");
  const auto t2 = io::read_text_file(dir + "/n2/simulate_00_time_series.tsv");
  const auto t3 = io::read_text_file(dir + "/n3/simulate_00_time_series.tsv");
  CHECK(t1 == t2);
  CHECK(t1 != t3);
}

TEST_CASE("cli failures carry precise messages and distinct exit codes") {
  const std::string dir = scratch_dir();
  io::write_text_file(dir + "/empty.mol", "");
  CHECK(run_cli("simulate --molecule " + dir + "/empty.mol --bz 29 --out " +
                    dir + "/e1",
                dir + "/e1.log") == 1);
  CHECK(mentions(io::read_text_file(dir + "/e1.log"), "missing [nuclei] section"));

  CHECK(run_cli("sweep --molecule formic_acid --light-shift-nt -43.7"
                " --bz-grid -4:2:4 --out " + dir + "/e2",
                dir + "/e2.log") == 2);
  CHECK(mentions(io::read_text_file(dir + "/e2.log"), "no valid points"));

  CHECK(run_cli("simulate --molecule formic_acid", dir + "/e3.log") == 1);
  CHECK(run_cli("sweep --molecule formic_acid --bz-grid nonsense --out " +
                    dir + "/e4",
                dir + "/e4.log") == 1);
  CHECK(mentions(io::read_text_file(dir + "/e4.log"), "not a number"));
}

#endif  // ZULF_CLI_BINARY

}  // TEST_SUITE
