#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "polchan/channel.hpp"
#include "polchan/crystal.hpp"
#include "polchan/error.hpp"
#include "polchan/io.hpp"
#include "polchan/parallel.hpp"
#include "polchan/reachability.hpp"
#include "polchan/sbc.hpp"
#include "polchan/tomography.hpp"

#ifndef POLCHAN_VERSION
#define POLCHAN_VERSION "0.0.0"
#endif

using namespace polchan;
using io::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string format = "csv";
  std::string output;
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::InvalidArgument, "failed writing '" + path + "'");
}

// Data file plus `<path>.meta.json`.
void emit(const std::string& command, const Common& common, const std::string& data,
          json config) {
  write_text(common.output, data);
  json meta;
  meta["command"] = command;
  meta["output"] = common.output;
  meta["format"] = common.format;
  meta["seed"] = common.seed;
  meta["threads"] = resolve_threads(common.threads);
  meta["versions"] = {{"polchan", POLCHAN_VERSION},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)}};
  meta["config"] = std::move(config);
  meta["timestamp"] = utc_now();
  write_text(common.output + ".meta.json", meta.dump(2) + "\n");
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidArgument, flag + ": cannot parse '" + item + "'");
    }
  }
  if (out.size() != expected)
    throw Error(ErrorKind::InvalidArgument,
                flag + " expects " + std::to_string(expected) + " comma-separated numbers");
  return out;
}

WavePacket packet_by_name(const std::string& name) {
  if (name == "quantum") return quantum_packet();
  if (name == "classical") return classical_packet();
  throw Error(ErrorKind::InvalidArgument, "unknown wave packet '" + name + "'");
}

// identity | dephasing:P | locus:THETA1 | angles:T1,T2,T3 | sbc:T_FS[:quantum|classical]
// | FILE.json
std::pair<ProcessMatrix, json> named_channel(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  json desc = {{"channel", spec}};
  if (kind == "identity") return {ProcessMatrix::identity(), desc};
  if (kind == "dephasing") return {dephasing_channel({parse_list(arg, 1, "dephasing")[0]}), desc};
  if (kind == "locus") {
    const WavePlateAngles a = dephasing_locus_angles(parse_list(arg, 1, "locus")[0]);
    desc["angles"] = io::angles_to_json(a);
    return {four_crystal_channel(a), desc};
  }
  if (kind == "angles") {
    const auto v = parse_list(arg, 3, "angles");
    const WavePlateAngles a(v[0], v[1], v[2]);
    desc["angles"] = io::angles_to_json(a);
    return {four_crystal_channel(a), desc};
  }
  if (kind == "sbc") {
    const auto sep = arg.find(':');
    const double t = parse_list(arg.substr(0, sep), 1, "sbc")[0];
    const WavePacket packet = packet_by_name(sep == std::string::npos ? "quantum" : arg.substr(sep + 1));
    desc["packet"] = io::wave_packet_to_json(packet);
    return {sbc_channel(t, packet), desc};
  }
  if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json")
    return {io::chi_from_json(io::read_json_file(spec)), desc};
  throw Error(ErrorKind::InvalidArgument, "unknown channel '" + spec + "'");
}

void require_format(const Common& c, std::initializer_list<const char*> allowed) {
  for (const char* f : allowed)
    if (c.format == f) return;
  throw Error(ErrorKind::InvalidArgument, "--format " + c.format + " is not supported here");
}

void add_common(CLI::App* cmd, Common& c, const std::string& default_output,
                const std::string& default_format) {
  c.output = default_output;
  c.format = default_format;
  cmd->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker thread cap (0 = all cores)")->capture_default_str();
  cmd->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_option("-o,--output", c.output, "Output file; metadata goes to <output>.meta.json")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controllable unital polarization channels: simulation and tomography"};
  app.set_version_flag("--version", POLCHAN_VERSION);
  app.require_subcommand(1);

  // sweep
  Common sweep_c;
  SweepConfig sweep_cfg;
  int resolution = 20;
  auto* sweep_cmd = app.add_subcommand("sweep", "Closed-form D vectors over a plate-angle grid");
  add_common(sweep_cmd, sweep_c, "sweep.csv", "csv");
  sweep_cmd->add_option("--grid-points", sweep_cfg.grid_points_per_angle, "Grid points per angle")
      ->capture_default_str();
  sweep_cmd->add_option("--angle-min", sweep_cfg.angle_min_deg, "Lower grid bound (deg)")->capture_default_str();
  sweep_cmd->add_option("--angle-max", sweep_cfg.angle_max_deg, "Upper grid bound, exclusive (deg)")
      ->capture_default_str();
  sweep_cmd->add_flag("--extend", sweep_cfg.symmetry_extension, "Close the cloud under the symmetry group");
  sweep_cmd->add_option("--resolution", resolution, "Voxel resolution for the coverage report")
      ->capture_default_str();

  // locus
  Common locus_c;
  double theta1_max = 10.0;
  int steps = 101;
  auto* locus_cmd = app.add_subcommand("locus", "chi eigenvalues along the dephasing locus");
  add_common(locus_cmd, locus_c, "locus.csv", "csv");
  locus_cmd->add_option("--theta1-max", theta1_max, "Largest first-plate angle (deg)")->capture_default_str();
  locus_cmd->add_option("--steps", steps, "Number of samples")->capture_default_str();

  // target
  Common target_c;
  std::string target_text;
  TargetSearchOptions target_opts;
  auto* target_cmd = app.add_subcommand("target", "Search plate angles for a target D vector");
  add_common(target_cmd, target_c, "target.json", "json");
  target_cmd->add_option("--d", target_text, "Target D vector, e.g. 0.5,0.5,1")->required();
  target_cmd->add_option("--restarts", target_opts.restarts, "Local searches")->capture_default_str();

  // qpt-sim
  Common sim_c;
  std::string channel_spec = "identity";
  AcquisitionConfig acq;
  std::string mode_text = "coincidence";
  bool noiseless = false;
  auto* sim_cmd = app.add_subcommand("qpt-sim", "Simulate tomography counts for a channel");
  add_common(sim_cmd, sim_c, "counts.csv", "csv");
  sim_cmd->add_option("--channel", channel_spec,
                      "identity | dephasing:P | locus:THETA1 | angles:T1,T2,T3 | "
                      "sbc:T_FS[:quantum|classical] | chi.json")
      ->capture_default_str();
  sim_cmd->add_option("--mode", mode_text, "Count mode")
      ->check(CLI::IsMember({"singles", "coincidence"}))
      ->capture_default_str();
  sim_cmd->add_option("--integration", acq.integration_s, "Seconds per setting")->capture_default_str();
  sim_cmd->add_option("--singles-rate", acq.singles_rate_hz, "Hz")->capture_default_str();
  sim_cmd->add_option("--coincidence-rate", acq.coincidence_rate_hz, "Hz")->capture_default_str();
  sim_cmd->add_option("--background-rate", acq.background_rate_hz, "Hz, singles only")->capture_default_str();
  sim_cmd->add_flag("--noiseless", noiseless, "Write rounded expected counts instead of Poisson draws");

  // reconstruct
  Common rec_c;
  std::string counts_path;
  std::string model_spec;
  int mc_samples = 20;
  MleOptions mle;
  double background = 2000.0;
  bool subtract = false;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Maximum-likelihood process tomography with error bars");
  add_common(rec_cmd, rec_c, "reconstruction.json", "json");
  rec_cmd->add_option("--counts", counts_path, "Counts CSV")->required();
  rec_cmd->add_option("--model", model_spec, "Reference channel for the fidelity (same syntax as qpt-sim)");
  rec_cmd->add_option("--mc-samples", mc_samples, "Monte Carlo resamples")->capture_default_str();
  rec_cmd->add_option("--penalty", mle.penalty_weight, "Trace-preservation penalty weight")->capture_default_str();
  rec_cmd->add_flag("--subtract-background", subtract, "Remove stray light from singles records");
  rec_cmd->add_option("--background-rate", background, "Hz")->capture_default_str();

  // sbc-curve
  Common sbc_c;
  std::string packet_name = "quantum";
  std::string quantity = "p";
  std::string geometry_path;
  double t_max = 1000.0;
  int sbc_steps = 201;
  double tau_override = 0.0;
  auto* sbc_cmd = app.add_subcommand("sbc-curve", "Dephasing probability or chi spectrum against SBC delay");
  add_common(sbc_cmd, sbc_c, "sbc.csv", "csv");
  sbc_cmd->add_option("--packet", packet_name, "Wave-packet preset")
      ->check(CLI::IsMember({"quantum", "classical"}))
      ->capture_default_str();
  sbc_cmd->add_option("--tau", tau_override, "Override the coherence time (fs)");
  sbc_cmd->add_option("--quantity", quantity, "p or eigenvalues")
      ->check(CLI::IsMember({"p", "eigenvalues"}))
      ->capture_default_str();
  sbc_cmd->add_option("--t-max", t_max, "Largest delay (fs)")->capture_default_str();
  sbc_cmd->add_option("--steps", sbc_steps, "Number of delays")->capture_default_str();
  sbc_cmd->add_option("--geometry", geometry_path,
                      "SBC geometry JSON; samples its full wedge travel instead of [0, t-max]");

  // fit-s2
  Common fit_c;
  std::string samples_path;
  double wavelength = 780.0;
  double fit_tau = 180.0;
  double t_start = 0.0;
  double t_stop = 13.0;
  int fit_count = 200;
  double noise = 0.02;
  auto* fit_cmd = app.add_subcommand("fit-s2", "Fit the S2 oscillation and report the wavelength");
  add_common(fit_cmd, fit_c, "fit.json", "json");
  fit_cmd->add_option("--input", samples_path, "Samples CSV (t_fs,value); synthetic data if omitted");
  fit_cmd->add_option("--wavelength", wavelength, "Synthetic centre wavelength (nm)")->capture_default_str();
  fit_cmd->add_option("--tau", fit_tau, "Synthetic coherence time (fs)")->capture_default_str();
  fit_cmd->add_option("--t-start", t_start, "First synthetic delay (fs)")->capture_default_str();
  fit_cmd->add_option("--t-stop", t_stop, "Last synthetic delay (fs)")->capture_default_str();
  fit_cmd->add_option("--samples", fit_count, "Synthetic sample count")->capture_default_str();
  fit_cmd->add_option("--noise", noise, "Synthetic additive noise sigma")->capture_default_str();

  // fidelity
  Common fid_c;
  std::string chi_a;
  std::string chi_b;
  bool strip = false;
  auto* fid_cmd = app.add_subcommand("fidelity", "Process fidelity between two chi matrices");
  add_common(fid_cmd, fid_c, "fidelity.json", "json");
  fid_cmd->add_option("a", chi_a, "First chi (JSON file or channel spec)")->required();
  fid_cmd->add_option("b", chi_b, "Second chi (JSON file or channel spec)")->required();
  fid_cmd->add_flag("--strip-rotations", strip, "Compare canonical D vectors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*sweep_cmd) {
      require_format(sweep_c, {"csv", "json"});
      default_thread_count() = sweep_c.threads;
      ReachabilityCloud cloud = sweep(sweep_cfg, sweep_c.threads);
      cloud.seed = sweep_c.seed;
      const double coverage = coverage_fraction(cloud, resolution);
      std::ostringstream data;
      if (sweep_c.format == "csv") {
        io::write_cloud_csv(data, cloud.points);
      } else {
        json pts = json::array();
        for (const DVector& d : cloud.points) pts.push_back(io::dvector_to_json(d));
        data << pts.dump() << "\n";
      }
      json cfg = io::sweep_metadata(cloud);
      cfg["coverage_resolution"] = resolution;
      cfg["coverage_fraction"] = coverage;
      emit("sweep", sweep_c, data.str(), cfg);
      std::cout << "points " << cloud.points.size() << " (raw " << cloud.raw_count << "), coverage "
                << coverage << " at resolution " << resolution << "\n";
    } else if (*locus_cmd) {
      default_thread_count() = locus_c.threads;
      const auto points = locus_scan(theta1_max, steps, locus_c.threads);
      std::ostringstream data;
      if (locus_c.format == "csv") {
        io::write_locus_csv(data, points);
      } else {
        json rows = json::array();
        for (const LocusPoint& p : points)
          rows.push_back({{"theta1_deg", p.theta1_deg},
                          {"angles", io::angles_to_json(p.angles)},
                          {"eigenvalues", {p.chi_eigenvalues(0), p.chi_eigenvalues(1),
                                           p.chi_eigenvalues(2), p.chi_eigenvalues(3)}},
                          {"p_analytic", p.p}});
        data << rows.dump(2) << "\n";
      }
      emit("locus", locus_c, data.str(),
           {{"theta1_max_deg", theta1_max},
            {"theta1_max_rad", theta1_max * std::numbers::pi / 180.0},
            {"steps", steps}});
      std::cout << "wrote " << points.size() << " locus samples to " << locus_c.output << "\n";
    } else if (*target_cmd) {
      require_format(target_c, {"json"});
      const auto v = parse_list(target_text, 3, "--d");
      const DVector target{v[0], v[1], v[2]};
      target_opts.seed = target_c.seed;
      target_opts.threads = target_c.threads;
      const TargetSearchResult r = find_angles_for_target(target, target_opts);
      json out = {{"target", io::dvector_to_json(target)},
                  {"angles", io::angles_to_json(r.angles)},
                  {"achieved", io::dvector_to_json(r.achieved)},
                  {"fidelity", r.fidelity},
                  {"evaluations", r.evaluations}};
      emit("target", target_c, out.dump(2) + "\n",
           {{"target", io::dvector_to_json(target)}, {"restarts", target_opts.restarts},
            {"grid_points", target_opts.grid_points}});
      const auto deg = r.angles.degrees();
      std::cout.precision(10);
      std::cout << "angles_deg " << deg[0] << " " << deg[1] << " " << deg[2] << "\n"
                << "achieved " << r.achieved.d1 << " " << r.achieved.d2 << " " << r.achieved.d3 << "\n"
                << "fidelity " << r.fidelity << "\n";
    } else if (*sim_cmd) {
      require_format(sim_c, {"csv"});
      acq.seed = sim_c.seed;
      acq.mode = *parse_count_mode(mode_text);
      const auto [chi, desc] = named_channel(channel_spec);
      const auto records = noiseless ? expected_counts(chi, acq) : simulate_counts(chi, acq);
      std::ostringstream data;
      io::write_count_records(data, records);
      json cfg = desc;
      cfg["acquisition"] = io::acquisition_to_json(acq);
      cfg["noiseless"] = noiseless;
      cfg["chi"] = io::chi_to_json(chi);
      emit("qpt-sim", sim_c, data.str(), cfg);
      std::cout << "wrote " << records.size() << " count records to " << sim_c.output << "\n";
    } else if (*rec_cmd) {
      require_format(rec_c, {"json"});
      default_thread_count() = rec_c.threads;
      std::istringstream in(io::read_file(counts_path));
      auto records = io::read_count_records(in);
      std::optional<ProcessMatrix> model;
      json cfg = {{"counts", counts_path}, {"mc_samples", mc_samples},
                  {"mle", io::mle_options_to_json(mle)},
                  {"background_subtracted", subtract}, {"background_rate_hz", background}};
      if (!model_spec.empty()) {
        model = named_channel(model_spec).first;
        cfg["model"] = model_spec;
      }
      mle.restart_seed = rec_c.seed;
      const TomographyResult r = monte_carlo_errors(records, mc_samples, rec_c.seed, model, mle,
                                                       subtract ? background : 0.0);
      emit("reconstruct", rec_c, io::tomography_result_to_json(r).dump(2) + "\n", cfg);
      std::cout << "eigenvalues";
      for (int i = 0; i < 4; ++i) std::cout << " " << r.eigenvalues(i) << "+-" << r.eigenvalue_errors(i);
      std::cout << "\n";
      if (r.fidelity_to_model)
        std::cout << "fidelity " << *r.fidelity_to_model << "+-" << r.fidelity_error.value_or(0.0) << "\n";
    } else if (*sbc_cmd) {
      require_format(sbc_c, {"csv"});
      WavePacket packet = packet_by_name(packet_name);
      if (tau_override > 0.0) packet.coherence_time_fs = tau_override;
      packet.validate();
      if (sbc_steps < 2) throw Error(ErrorKind::InvalidArgument, "--steps must be at least 2");
      json cfg = {{"packet", io::wave_packet_to_json(packet)}, {"quantity", quantity}};
      double t0 = 0.0;
      double t1 = t_max;
      if (!geometry_path.empty()) {
        SbcGeometry g = io::sbc_geometry_from_json(io::read_json_file(geometry_path));
        g.translation_mm = 0.0;
        t0 = sbc_delay(g);
        g.translation_mm = g.max_translation_mm();
        t1 = sbc_delay(g);
        cfg["geometry"] = io::sbc_geometry_to_json(g);
      }
      cfg["t_start_fs"] = t0;
      cfg["t_stop_fs"] = t1;
      std::ostringstream data;
      if (quantity == "p") data << "t_fs,value\n";
      else data << "t_fs,eig0,eig1,eig2,eig3\n";
      for (int i = 0; i < sbc_steps; ++i) {
        const double t = std::abs(t0 + (t1 - t0) * i / (sbc_steps - 1));
        data << io::format_double(t);
        if (quantity == "p") {
          data << ',' << io::format_double(sbc_dephasing_probability(t, packet));
        } else {
          const Vec4 e = sbc_channel(t, packet).eigenvalues();
          for (int k = 0; k < 4; ++k) data << ',' << io::format_double(e(k));
        }
        data << '\n';
      }
      emit("sbc-curve", sbc_c, data.str(), cfg);
      std::cout << "wrote " << sbc_steps << " delays to " << sbc_c.output << "\n";
    } else if (*fit_cmd) {
      require_format(fit_c, {"json"});
      std::vector<CurvePoint> samples;
      json cfg;
      if (!samples_path.empty()) {
        std::istringstream in(io::read_file(samples_path));
        samples = io::read_curve_csv(in);
        cfg["input"] = samples_path;
      } else {
        const WavePacket packet{wavelength, fit_tau, SpectralModel::gaussian};
        samples = synthetic_s2_samples(packet, t_start, t_stop, fit_count, noise, fit_c.seed);
        cfg["synthetic"] = {{"packet", io::wave_packet_to_json(packet)},
                            {"t_start_fs", t_start}, {"t_stop_fs", t_stop},
                            {"samples", fit_count}, {"noise_sigma", noise}};
        std::ostringstream curve;
        io::write_curve_csv(curve, samples);
        write_text(fit_c.output + ".samples.csv", curve.str());
      }
      const WavelengthFit f = fit_wavelength(samples);
      json out = {{"wavelength_nm", f.wavelength_nm}, {"uncertainty_nm", f.uncertainty_nm},
                  {"visibility", f.visibility},       {"envelope_rate_per_fs2", f.envelope_rate},
                  {"phase_rad", f.phase},             {"rms_residual", f.rms_residual},
                  {"iterations", f.iterations}};
      emit("fit-s2", fit_c, out.dump(2) + "\n", cfg);
      std::cout << "wavelength " << f.wavelength_nm << " +- " << f.uncertainty_nm << " nm\n";
    } else if (*fid_cmd) {
      require_format(fid_c, {"json"});
      const ProcessMatrix a = named_channel(chi_a).first;
      const ProcessMatrix b = named_channel(chi_b).first;
      const double f = strip ? rotation_stripped_fidelity(a, b) : process_fidelity(a, b);
      json out = {{"a", chi_a}, {"b", chi_b}, {"strip_rotations", strip}, {"fidelity", f}};
      emit("fidelity", fid_c, out.dump(2) + "\n", {{"a", chi_a}, {"b", chi_b}, {"strip_rotations", strip}});
      std::cout.precision(12);
      std::cout << "fidelity " << f << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.kind()) ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
