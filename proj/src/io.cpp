#include "polchan/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "polchan/error.hpp"

namespace polchan::io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }

double parse_double(std::string_view text, const std::string& context) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    bad(context + ": cannot parse number '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  return s;
}

// Data rows of a CSV stream after checking its header.
std::vector<std::vector<std::string>> read_rows(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || strip(line) != header)
    bad("expected CSV header '" + header + "'");
  const std::size_t width = split(header).size();
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split(strip(line));
    if (fields.size() != width)
      bad("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
    rows.push_back(std::move(fields));
  }
  return rows;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) bad(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

json complex_matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXcd complex_matrix_from_json(const json& j, int rows, int cols) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows))
    bad("matrix must have " + std::to_string(rows) + " rows");
  Eigen::MatrixXcd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(cols))
      bad("matrix row must have " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        bad("matrix entries must be [re, im] pairs");
      m(r, c) = cd(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json chi_to_json(const ProcessMatrix& chi) {
  return json{{"basis", "pauli"}, {"matrix", complex_matrix_to_json(chi.matrix())}};
}

ProcessMatrix chi_from_json(const json& j) {
  if (!j.is_object() || !j.contains("matrix")) bad("process matrix document needs a 'matrix' key");
  if (j.contains("basis") && j.at("basis") != "pauli") bad("only the 'pauli' basis is supported");
  ProcessMatrix chi(complex_matrix_from_json(j.at("matrix"), 4, 4));
  chi.validate(1e-9, 1e-9);
  return chi;
}

json density_to_json(const DensityMatrix& rho) { return complex_matrix_to_json(rho.matrix()); }

DensityMatrix density_from_json(const json& j) {
  DensityMatrix rho(complex_matrix_from_json(j, 2, 2));
  rho.validate(Tolerances{}.input);
  return rho;
}

json stokes_to_json(const StokesVector& s) { return json::array({s.s1, s.s2, s.s3}); }

json dvector_to_json(const DVector& d) { return json::array({d.d1, d.d2, d.d3}); }

DVector dvector_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) bad("D vector must be a 3-element array");
  for (const json& e : j)
    if (!e.is_number()) bad("D vector entries must be numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json angles_to_json(const WavePlateAngles& angles) {
  const auto deg = angles.degrees();
  const auto rad = angles.radians();
  return json{{"degrees", json::array({deg[0], deg[1], deg[2]})},
              {"radians", json::array({rad[0], rad[1], rad[2]})}};
}

json crystal_stack_to_json(const CrystalStack& stack) {
  json crystals = json::array();
  for (const Crystal& c : stack.crystals)
    crystals.push_back({{"delay_bins", c.delay_bins},
                        {"slow_axis", std::string(to_string(c.slow_axis))},
                        {"residual_phase", c.residual_phase}});
  return json{{"base_delay_fs", stack.base_delay_fs}, {"crystals", crystals}};
}

CrystalStack crystal_stack_from_json(const json& j) {
  if (!j.is_object()) bad("crystal stack must be a JSON object");
  CrystalStack stack = CrystalStack::standard();
  stack.base_delay_fs = number(j, "base_delay_fs", stack.base_delay_fs);
  if (j.contains("crystals")) {
    const json& cs = j.at("crystals");
    if (!cs.is_array() || cs.size() != 4) bad("'crystals' must list exactly 4 crystals");
    for (std::size_t i = 0; i < 4; ++i) {
      const json& c = cs[i];
      Crystal& out = stack.crystals[i];
      if (c.contains("delay_bins")) {
        if (!c.at("delay_bins").is_number_integer()) bad("'delay_bins' must be an integer");
        out.delay_bins = c.at("delay_bins").get<int>();
      }
      if (c.contains("slow_axis")) {
        const std::string axis = c.at("slow_axis").get<std::string>();
        if (axis == "h" || axis == "horizontal") out.slow_axis = SlowAxis::horizontal;
        else if (axis == "v" || axis == "vertical") out.slow_axis = SlowAxis::vertical;
        else bad("unknown slow axis '" + axis + "'");
      }
      out.residual_phase = number(c, "residual_phase", out.residual_phase);
    }
  }
  stack.validate();
  return stack;
}

json sbc_geometry_to_json(const SbcGeometry& g) {
  return json{{"wedge_angle_deg", g.wedge_angle_deg},
              {"translation_mm", g.translation_mm},
              {"compensator", std::string(to_string(g.compensator))},
              {"delta_n", g.delta_n},
              {"compensator_length_mm", g.compensator_length_mm},
              {"wedge_base_path_mm", g.wedge_base_path_mm},
              {"wedge_span_fs", g.wedge_span_fs}};
}

SbcGeometry sbc_geometry_from_json(const json& j) {
  if (!j.is_object()) bad("SBC geometry must be a JSON object");
  SbcGeometry g;
  g.wedge_angle_deg = number(j, "wedge_angle_deg", g.wedge_angle_deg);
  g.translation_mm = number(j, "translation_mm", g.translation_mm);
  g.delta_n = number(j, "delta_n", g.delta_n);
  g.compensator_length_mm = number(j, "compensator_length_mm", g.compensator_length_mm);
  g.wedge_base_path_mm = number(j, "wedge_base_path_mm", g.wedge_base_path_mm);
  g.wedge_span_fs = number(j, "wedge_span_fs", g.wedge_span_fs);
  if (j.contains("compensator")) {
    const std::string c = j.at("compensator").get<std::string>();
    if (c == "perpendicular") g.compensator = Compensator::perpendicular;
    else if (c == "omitted") g.compensator = Compensator::omitted;
    else if (c == "parallel") g.compensator = Compensator::parallel;
    else bad("unknown compensator setting '" + c + "'");
  }
  g.validate();
  return g;
}

json wave_packet_to_json(const WavePacket& p) {
  return json{{"center_wavelength_nm", p.center_wavelength_nm},
              {"coherence_time_fs", p.coherence_time_fs},
              {"spectral_model", "gaussian"},
              {"coherence_convention", "|gamma(tau)| = exp(-1/2)"}};
}

WavePacket wave_packet_from_json(const json& j) {
  if (!j.is_object()) bad("wave packet must be a JSON object");
  WavePacket p;
  p.center_wavelength_nm = number(j, "center_wavelength_nm", p.center_wavelength_nm);
  p.coherence_time_fs = number(j, "coherence_time_fs", p.coherence_time_fs);
  if (j.contains("spectral_model") && j.at("spectral_model") != "gaussian")
    bad("only the gaussian spectral model is supported");
  p.validate();
  return p;
}

json acquisition_to_json(const AcquisitionConfig& c) {
  return json{{"singles_rate_hz", c.singles_rate_hz},
              {"coincidence_rate_hz", c.coincidence_rate_hz},
              {"background_rate_hz", c.background_rate_hz},
              {"integration_s", c.integration_s},
              {"mode", std::string(to_string(c.mode))},
              {"seed", c.seed}};
}

json mle_options_to_json(const MleOptions& o) {
  return json{{"penalty_weight", o.penalty_weight},
              {"gradient_tolerance", o.gradient_tolerance},
              {"target_gradient", o.target_gradient},
              {"max_iterations", o.max_iterations},
              {"restart_seed", o.restart_seed}};
}

json tomography_result_to_json(const TomographyResult& r) {
  json out = chi_to_json(r.chi_hat);
  out["eigenvalues"] = json::array({r.eigenvalues(0), r.eigenvalues(1), r.eigenvalues(2), r.eigenvalues(3)});
  out["eigenvalue_errors"] = json::array(
      {r.eigenvalue_errors(0), r.eigenvalue_errors(1), r.eigenvalue_errors(2), r.eigenvalue_errors(3)});
  if (r.fidelity_to_model) {
    out["fidelity_to_model"] = *r.fidelity_to_model;
    out["fidelity_error"] = r.fidelity_error.value_or(0.0);
  }
  out["mc_samples"] = r.mc_samples;
  out["seed"] = r.seed;
  out["penalty_weight"] = r.penalty_weight;
  out["trace_preservation_deviation"] = r.trace_preservation_deviation;
  out["optimizer"] = {{"iterations", r.diagnostics.iterations},
                      {"evaluations", r.diagnostics.evaluations},
                      {"restarts", r.diagnostics.restarts},
                      {"objective", r.diagnostics.objective},
                      {"gradient_norm", r.diagnostics.gradient_norm}};
  return out;
}

json sweep_metadata(const ReachabilityCloud& cloud) {
  const SweepConfig& c = cloud.config;
  return json{{"grid_points_per_angle", c.grid_points_per_angle},
              {"angle_min_deg", c.angle_min_deg},
              {"angle_max_deg", c.angle_max_deg},
              {"angle_min_rad", c.angle_min_deg * std::numbers::pi / 180.0},
              {"angle_max_rad", c.angle_max_deg * std::numbers::pi / 180.0},
              {"symmetry_extension", c.symmetry_extension},
              {"raw_count", cloud.raw_count},
              {"point_count", cloud.points.size()},
              {"seed", cloud.seed},
              {"timestamp", cloud.timestamp}};
}

void write_count_records(std::ostream& out, const std::vector<CountRecord>& records) {
  out << "input,projector,mode,integration_s,counts\n";
  for (const CountRecord& r : records)
    out << to_string(r.input) << ',' << to_string(r.projector) << ',' << to_string(r.mode) << ','
        << format_double(r.integration_s) << ',' << r.counts << '\n';
}

std::vector<CountRecord> read_count_records(std::istream& in) {
  std::vector<CountRecord> out;
  for (const auto& f : read_rows(in, "input,projector,mode,integration_s,counts")) {
    CountRecord r;
    const auto input = parse_basis_label(strip(f[0]));
    const auto proj = parse_basis_label(strip(f[1]));
    const auto mode = parse_count_mode(strip(f[2]));
    if (!input || !proj) bad("unknown polarization label in counts file");
    if (!mode) bad("unknown count mode '" + f[2] + "'");
    r.input = *input;
    r.projector = *proj;
    r.mode = *mode;
    r.integration_s = parse_double(f[3], "integration_s");
    if (!(r.integration_s > 0.0)) bad("integration_s must be positive");
    const std::string counts = strip(f[4]);
    const auto [ptr, ec] = std::from_chars(counts.data(), counts.data() + counts.size(), r.counts);
    if (ec != std::errc() || ptr != counts.data() + counts.size() || r.counts < 0)
      bad("counts must be a non-negative integer, got '" + counts + "'");
    out.push_back(r);
  }
  return out;
}

void write_cloud_csv(std::ostream& out, const std::vector<DVector>& points) {
  out << "d1,d2,d3\n";
  for (const DVector& d : points)
    out << format_double(d.d1) << ',' << format_double(d.d2) << ',' << format_double(d.d3) << '\n';
}

std::vector<DVector> read_cloud_csv(std::istream& in) {
  std::vector<DVector> out;
  for (const auto& f : read_rows(in, "d1,d2,d3"))
    out.push_back({parse_double(f[0], "d1"), parse_double(f[1], "d2"), parse_double(f[2], "d3")});
  return out;
}

void write_locus_csv(std::ostream& out, const std::vector<LocusPoint>& points) {
  out << "theta1_deg,eig0,eig1,eig2,eig3,p_analytic\n";
  for (const LocusPoint& p : points) {
    out << format_double(p.theta1_deg);
    for (int i = 0; i < 4; ++i) out << ',' << format_double(p.chi_eigenvalues(i));
    out << ',' << format_double(p.p) << '\n';
  }
}

std::vector<LocusPoint> read_locus_csv(std::istream& in) {
  std::vector<LocusPoint> out;
  for (const auto& f : read_rows(in, "theta1_deg,eig0,eig1,eig2,eig3,p_analytic")) {
    LocusPoint p;
    p.theta1_deg = parse_double(f[0], "theta1_deg");
    p.angles = dephasing_locus_angles(p.theta1_deg);
    for (int i = 0; i < 4; ++i)
      p.chi_eigenvalues(i) = parse_double(f[static_cast<std::size_t>(i + 1)], "eigenvalue");
    p.p = parse_double(f[5], "p_analytic");
    out.push_back(p);
  }
  return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
  out << "t_fs,value\n";
  for (const CurvePoint& p : points) out << format_double(p.t_fs) << ',' << format_double(p.value) << '\n';
}

std::vector<CurvePoint> read_curve_csv(std::istream& in) {
  std::vector<CurvePoint> out;
  for (const auto& f : read_rows(in, "t_fs,value"))
    out.push_back({parse_double(f[0], "t_fs"), parse_double(f[1], "value")});
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    bad("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace polchan::io
