#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "zulf/analysis.hpp"
#include "zulf/pipeline.hpp"
#include "zulf/sensor.hpp"
#include "zulf/spin_system.hpp"

namespace zulf::io {

// 64-bit FNV-1a; stamps outputs with a provenance hash of the inputs
std::uint64_t fnv1a64(std::string_view text);
std::string hash_hex(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// resolves a molecule/sensor reference: an existing path wins, otherwise a
// bare name is looked up under $ZULFASYM_DATA_DIR/<kind>/ and then the
// built-in data directory; kind is "molecules" or "sensors"
std::string resolve_data_file(const std::string& ref, const std::string& kind);

MoleculeSpec parse_molecule_text(const std::string& text, const std::string& origin);
MoleculeSpec read_molecule_file(const std::string& path);

SensorModel parse_sensor_text(const std::string& text, const std::string& origin);
SensorModel read_sensor_file(const std::string& path);

struct TimeSeries {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
};

std::string format_time_series_tsv(const TimeSeries& ts, const std::string& config_hash);
TimeSeries parse_time_series_tsv(const std::string& text);

std::string format_spectrum_tsv(const Spectrum& sp, const std::string& config_hash);
Spectrum parse_spectrum_tsv(const std::string& text);

std::string format_line_table_tsv(const SensorLineSet& lines, const std::string& config_hash);
SensorLineSet parse_line_table_tsv(const std::string& text);

// columns Bz_nT, eta, amp1, amp2, valid; failed points keep their reason in
// header comments so the curve reparses losslessly
std::string format_eta_curve_tsv(const EtaCurve& curve, const std::string& config_hash);
EtaCurve parse_eta_curve_tsv(const std::string& text);

struct AnalysisReport {
  std::string command;
  std::string config_hash;
  std::string molecule_name;
  double center_hz = 0.0;
  int total_points = 0;
  int valid_points = 0;
  std::vector<CrossPoint> cross_points;
  bool has_magic_field_estimate = false;
  double magic_field_estimate_tesla = 0.0;
  int g_sign = 0;
  std::string g_note;
  RegionSummary regions[3];
  bool has_light_shift_fit = false;
  LineFit light_shift_fit;  // slope nT/mW, intercept nT, residual nT
  double alpha_recovered_nt_per_mw = 0.0;
};

std::string format_report_json(const AnalysisReport& r);
AnalysisReport parse_report_json(const std::string& text);

}  // namespace zulf::io
