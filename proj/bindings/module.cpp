#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <vector>

#include "zulf/analysis.hpp"
#include "zulf/constants.hpp"
#include "zulf/io.hpp"
#include "zulf/pipeline.hpp"
#include "zulf/sensor.hpp"
#include "zulf/spin_system.hpp"

namespace py = pybind11;
using namespace zulf;

namespace {

py::array_t<double> as_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "spin dynamics, magnetometer response and asymmetry analysis for "
            "ultralow-field NMR";

  m.attr("gamma_1h") = constants::gamma_1h;
  m.attr("gamma_13c") = constants::gamma_13c;
  m.attr("gamma_electron") = constants::gamma_electron;

  py::class_<Nucleus>(m, "Nucleus")
      .def(py::init<>())
      .def(py::init([](const std::string& isotope, const std::string& site) {
             return Nucleus{isotope, site, gamma_of_isotope(isotope), 0.5};
           }),
           py::arg("isotope"), py::arg("site"))
      .def_readwrite("isotope", &Nucleus::isotope)
      .def_readwrite("site", &Nucleus::site)
      .def_readwrite("gamma", &Nucleus::gamma)
      .def_readwrite("spin", &Nucleus::spin)
      .def("__repr__", [](const Nucleus& n) {
        return "Nucleus(" + n.isotope + ", " + n.site + ")";
      });

  py::class_<MoleculeSpec>(m, "MoleculeSpec")
      .def(py::init<>())
      .def_readwrite("name", &MoleculeSpec::name)
      .def_readwrite("nuclei", &MoleculeSpec::nuclei)
      .def_readwrite("j_couplings_hz", &MoleculeSpec::j_couplings_hz)
      .def("size", &MoleculeSpec::size)
      .def("dimension", &MoleculeSpec::dimension)
      .def("j", &MoleculeSpec::j)
      .def("set_j", &MoleculeSpec::set_j)
      .def("site_index", &MoleculeSpec::site_index)
      .def("validate", &MoleculeSpec::validate);

  m.def("gamma_of_isotope", &gamma_of_isotope);
  m.def("resolve_data_file", &io::resolve_data_file, py::arg("ref"),
        py::arg("kind"));
  m.def("read_molecule_file", &io::read_molecule_file);
  m.def("parse_molecule_text", &io::parse_molecule_text, py::arg("text"),
        py::arg("origin") = "inline");
  m.def("read_sensor_file", &io::read_sensor_file);
  m.def("parse_sensor_text", &io::parse_sensor_text, py::arg("text"),
        py::arg("origin") = "inline");

  py::class_<FieldConfig>(m, "FieldConfig")
      .def(py::init<>())
      .def_readwrite("b_tesla", &FieldConfig::b_tesla)
      .def_static("axial", &FieldConfig::axial);

  py::class_<PolarizationConfig>(m, "PolarizationConfig")
      .def(py::init<>())
      .def_readwrite("bp_tesla", &PolarizationConfig::bp_tesla)
      .def_readwrite("temperature_k", &PolarizationConfig::temperature_k)
      .def_readwrite("guide_axis", &PolarizationConfig::guide_axis)
      .def("epsilon", &PolarizationConfig::epsilon)
      .def("validate", &PolarizationConfig::validate);

  py::class_<StateLabel>(m, "StateLabel")
      .def_readonly("f", &StateLabel::f)
      .def_readonly("m_f", &StateLabel::m_f)
      .def_readonly("k", &StateLabel::k)
      .def_readonly("tie", &StateLabel::tie)
      .def("text", &StateLabel::text)
      .def("__repr__", &StateLabel::text);

  py::class_<EigenSystem>(m, "EigenSystem")
      .def_readonly("eigenvalues", &EigenSystem::eigenvalues)
      .def_readonly("eigenvectors", &EigenSystem::eigenvectors)
      .def_readonly("labels", &EigenSystem::labels)
      .def("dimension", &EigenSystem::dimension)
      .def("labeled", &EigenSystem::labeled);

  py::class_<Line>(m, "Line")
      .def_readonly("frequency_hz", &Line::frequency_hz)
      .def_readonly("amp_x", &Line::amp_x)
      .def_readonly("amp_y", &Line::amp_y)
      .def_readonly("amp_z", &Line::amp_z)
      .def_readonly("bra_label", &Line::bra_label)
      .def_readonly("ket_label", &Line::ket_label);

  py::class_<LineSet>(m, "LineSet")
      .def_readonly("lines", &LineSet::lines)
      .def_readonly("dc_x", &LineSet::dc_x)
      .def_readonly("dc_y", &LineSet::dc_y)
      .def_readonly("dc_z", &LineSet::dc_z)
      .def("max_abs_amp", &LineSet::max_abs_amp);

  m.def("build_hamiltonian", &build_hamiltonian, py::arg("molecule"),
        py::arg("field"));
  m.def("eigendecompose", &eigendecompose);
  m.def("equivalent_proton_group", &equivalent_proton_group);
  m.def("label_zero_field_states", &label_zero_field_states, py::arg("es"),
        py::arg("molecule"));
  m.def("label_by_overlap", &label_by_overlap, py::arg("es"),
        py::arg("zero_field_reference"));
  m.def("thermal_initial_state", &thermal_initial_state, py::arg("molecule"),
        py::arg("polarization") = PolarizationConfig{});
  m.def("line_decomposition", &line_decomposition, py::arg("es"),
        py::arg("rho0"), py::arg("molecule"), py::arg("merge_width_hz") = 1e-6,
        py::arg("amp_floor_rel") = 1e-12);
  m.def("reconstruct", &reconstruct, py::arg("lines"), py::arg("t"),
        py::arg("axis"));

  py::class_<PerturbativeLine>(m, "PerturbativeLine")
      .def_readonly("frequency_hz", &PerturbativeLine::frequency_hz)
      .def_readonly("manifold_gap_hz", &PerturbativeLine::manifold_gap_hz)
      .def_readonly("bra_label", &PerturbativeLine::bra_label)
      .def_readonly("ket_label", &PerturbativeLine::ket_label);
  m.def("perturbative_frequencies", &perturbative_frequencies,
        py::arg("molecule"), py::arg("bz_tesla"));

  py::class_<SensorModel>(m, "SensorModel")
      .def(py::init<>())
      .def_readwrite("gamma_eff", &SensorModel::gamma_eff)
      .def_readwrite("gamma_relax", &SensorModel::gamma_relax)
      .def_readwrite("p0", &SensorModel::p0)
      .def_readwrite("light_shift_tesla", &SensorModel::light_shift_tesla)
      .def_readwrite("bias_bz_tesla", &SensorModel::bias_bz_tesla)
      .def("validate", &SensorModel::validate)
      .def("effective_field_tesla", &SensorModel::effective_field_tesla)
      .def("transfer", &SensorModel::transfer, py::arg("axis"),
           py::arg("frequency_hz"))
      .def("amplitude", &SensorModel::amplitude)
      .def("phase", &SensorModel::phase)
      .def("magic_field_tesla", &SensorModel::magic_field_tesla);

  py::class_<CouplingConfig>(m, "CouplingConfig")
      .def(py::init<>())
      .def_readwrite("kappa", &CouplingConfig::kappa)
      .def_readwrite("field_scale", &CouplingConfig::field_scale)
      .def_readwrite("couple_z", &CouplingConfig::couple_z)
      .def("validate", &CouplingConfig::validate);

  py::class_<AcquisitionConfig> acq(m, "AcquisitionConfig");
  py::enum_<AcquisitionConfig::Window>(acq, "Window")
      .value("none", AcquisitionConfig::Window::none)
      .value("exp_match", AcquisitionConfig::Window::exp_match);
  acq.def(py::init<>())
      .def_readwrite("sample_rate_hz", &AcquisitionConfig::sample_rate_hz)
      .def_readwrite("duration_s", &AcquisitionConfig::duration_s)
      .def_readwrite("t2_s", &AcquisitionConfig::t2_s)
      .def_readwrite("window", &AcquisitionConfig::window)
      .def("validate", &AcquisitionConfig::validate)
      .def("sample_count", &AcquisitionConfig::sample_count)
      .def("decay_rate", &AcquisitionConfig::decay_rate);

  py::class_<SensorLine>(m, "SensorLine")
      .def_readonly("frequency_hz", &SensorLine::frequency_hz)
      .def_readonly("signal", &SensorLine::signal)
      .def_readonly("bra_label", &SensorLine::bra_label)
      .def_readonly("ket_label", &SensorLine::ket_label);

  py::class_<SensorLineSet>(m, "SensorLineSet")
      .def_readonly("lines", &SensorLineSet::lines);

  m.def("sensor_signal_lines",
        py::overload_cast<const LineSet&, const SensorModel&,
                          const CouplingConfig&>(&sensor_signal_lines),
        py::arg("lines"), py::arg("sensor"), py::arg("coupling"));
  m.def("sensor_signal_lines",
        py::overload_cast<const LineSet&, const TransferSampler&,
                          const CouplingConfig&>(&sensor_signal_lines),
        py::arg("lines"), py::arg("transfer"), py::arg("coupling"));
  m.def("rotated_observable_signal", &rotated_observable_signal, py::arg("es"),
        py::arg("rho0"), py::arg("molecule"), py::arg("sensor"),
        py::arg("coupling"), py::arg("merge_width_hz") = 1e-6,
        py::arg("amp_floor_rel") = 1e-12);

  m.def("synthesize_time_signal",
        [](const SensorLineSet& lines, const AcquisitionConfig& acq_cfg) {
          return as_array(synthesize_time_signal(lines, acq_cfg));
        },
        py::arg("lines"), py::arg("acq"));
  m.def("add_noise",
        [](std::vector<double> samples, double sigma, std::uint64_t seed) {
          add_noise(samples, sigma, seed);
          return as_array(samples);
        },
        py::arg("samples"), py::arg("sigma"), py::arg("seed"));

  py::class_<Spectrum>(m, "Spectrum")
      .def_readonly("grid_hz", &Spectrum::grid_hz)
      .def_readonly("values", &Spectrum::values)
      .def_readonly("provenance", &Spectrum::provenance)
      .def_readonly("config_note", &Spectrum::config_note)
      .def("magnitude", &Spectrum::magnitude);

  m.def("spectrum_fft", &spectrum_fft, py::arg("samples"), py::arg("acq"));
  m.def("analytic_spectrum", &analytic_spectrum, py::arg("lines"),
        py::arg("acq"), py::arg("grid_hz"));
  m.def("uniform_grid", &uniform_grid, py::arg("lo_hz"), py::arg("hi_hz"),
        py::arg("points"));

  py::class_<PeakFit>(m, "PeakFit")
      .def_readonly("center_hz", &PeakFit::center_hz)
      .def_readonly("magnitude", &PeakFit::magnitude)
      .def_readonly("width_hz", &PeakFit::width_hz);

  py::class_<DoubletFit>(m, "DoubletFit")
      .def_readonly("low", &DoubletFit::low)
      .def_readonly("high", &DoubletFit::high)
      .def_readonly("baseline", &DoubletFit::baseline)
      .def_readonly("baseline_slope", &DoubletFit::baseline_slope)
      .def_readonly("residual_norm", &DoubletFit::residual_norm)
      .def_readonly("iterations", &DoubletFit::iterations);

  m.def("fit_doublet", &fit_doublet, py::arg("spectrum"), py::arg("center_hz"),
        py::arg("search_window_hz"));
  m.def("asymmetry_ratio", &asymmetry_ratio, py::arg("low"), py::arg("high"));

  py::class_<EtaPoint>(m, "EtaPoint")
      .def_readonly("bz_tesla", &EtaPoint::bz_tesla)
      .def_readonly("eta", &EtaPoint::eta)
      .def_readonly("amp_low", &EtaPoint::amp_low)
      .def_readonly("amp_high", &EtaPoint::amp_high)
      .def_readonly("splitting_hz", &EtaPoint::splitting_hz)
      .def_readonly("valid", &EtaPoint::valid)
      .def_readonly("reason", &EtaPoint::reason);

  py::class_<SweepOptions>(m, "SweepOptions")
      .def(py::init<>())
      .def_readwrite("center_hz", &SweepOptions::center_hz)
      .def_readwrite("window_halfwidth_hz", &SweepOptions::window_halfwidth_hz)
      .def_readwrite("min_separation_widths",
                     &SweepOptions::min_separation_widths)
      .def_readwrite("points_per_width", &SweepOptions::points_per_width)
      .def_readwrite("line_floor_rel", &SweepOptions::line_floor_rel);

  py::class_<EtaCurve>(m, "EtaCurve")
      .def_readonly("points", &EtaCurve::points)
      .def_readonly("center_hz", &EtaCurve::center_hz)
      .def_readonly("t2_s", &EtaCurve::t2_s)
      .def_readonly("kappa", &EtaCurve::kappa)
      .def_readonly("light_shift_tesla", &EtaCurve::light_shift_tesla)
      .def_readonly("molecule_name", &EtaCurve::molecule_name);

  m.def("eta_sweep", &eta_sweep, py::arg("molecule"),
        py::arg("sensor_template"), py::arg("coupling"), py::arg("acq"),
        py::arg("bz_grid_tesla"),
        py::arg("polarization") = PolarizationConfig{},
        py::arg("options") = SweepOptions{});

  py::class_<CrossPoint>(m, "CrossPoint")
      .def_readonly("bz_tesla", &CrossPoint::bz_tesla)
      .def_readonly("trivial", &CrossPoint::trivial);
  m.def("find_cross_points", &find_cross_points, py::arg("curve"),
        py::arg("k") = 4);

  py::class_<RegionSummary>(m, "RegionSummary")
      .def_readonly("sign", &RegionSummary::sign)
      .def_readonly("points", &RegionSummary::points)
      .def_readonly("agreement", &RegionSummary::agreement);

  py::class_<GSignResult>(m, "GSignResult")
      .def_readonly("g_sign", &GSignResult::g_sign)
      .def_readonly("cross_points", &GSignResult::cross_points)
      .def_readonly("note", &GSignResult::note)
      .def_property_readonly("regions", [](const GSignResult& g) {
        return std::vector<RegionSummary>{g.regions[0], g.regions[1],
                                          g.regions[2]};
      });
  m.def("infer_g_sign", &infer_g_sign, py::arg("curve"));

  py::class_<LineFit>(m, "LineFit")
      .def_readonly("slope", &LineFit::slope)
      .def_readonly("intercept", &LineFit::intercept)
      .def_readonly("residual", &LineFit::residual)
      .def("light_shift_at", &LineFit::light_shift_at);
  m.def("light_shift_from_power", &light_shift_from_power, py::arg("points"));
}
