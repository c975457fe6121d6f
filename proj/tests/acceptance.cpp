// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "oracles.hpp"
#include "polchan/error.hpp"
#include "polchan/reachability.hpp"
#include "polchan/sbc.hpp"
#include "polchan/tomography.hpp"

using namespace polchan;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

Outcome simulator_vs_closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 180.0);
  double worst_canonical = 0.0;
  double worst_axis = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const WavePlateAngles a(u(rng), u(rng), u(rng));
    const DMatrix d = d_matrix_from_chi(four_crystal_channel(a)).d;
    const DVector closed = analytic_d(a);
    worst_canonical =
        std::max(worst_canonical, max_abs_diff(d_vector(d), d_vector(DMatrix{closed.as_vector().asDiagonal()})));
    worst_axis = std::max(worst_axis, max_abs_diff(diagonal_in_analytic_order(d), closed));
  }
  const double elapsed = seconds_since(t0);
  return {worst_canonical <= 1e-9 && worst_axis <= 1e-9 && elapsed < 10.0,
          fmt("1000 triples, max |dD| canonical %.2e, per axis %.2e, %.2f s", worst_canonical, worst_axis,
              elapsed)};
}

Outcome dephasing_probability_anchors() {
  const double p0 = p_of_theta1(0.0);

  double lo = 0.0;
  double hi = 11.25;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (p_of_theta1(mid) < 0.5 ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);
  const double root_closed = deg(std::acos(std::sqrt(2.0 / 3.0))) / 4.0;

  // Closed form evaluated here, and the identity-branch eigenvalue of the
  // simulated channel, as two independent references for P(9).
  const double c = std::cos(4.0 * 9.0 * std::numbers::pi / 180.0);
  const double closed9 = (-3.0 * c * c * c * c + 2.0 * c * c + 1.0) / 2.0;
  const double sim9 = 1.0 - four_crystal_channel(dephasing_locus_angles(9.0)).eigenvalues()(1);
  const double p9 = p_of_theta1(9.0);

  const bool ok = p0 == 0.0 && std::abs(root - 8.8161) <= 0.005 && std::abs(root - root_closed) <= 1e-9 &&
                  std::abs(p9 - closed9) <= 1e-5 && std::abs(p9 - sim9) <= 1e-5;
  return {ok, fmt("P(0)=%g, root %.5f deg (closed %.5f), P(9)=%.7f vs closed %.7f, simulated %.7f "
                  "(quoted 0.51196 is %.1e away)",
                  p0, root, root_closed, p9, closed9, sim9, std::abs(0.51196 - closed9))};
}

Outcome locus_fidelity() {
  double worst = 1.0;
  double at = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double t = 9.0 * k / 200.0;
    const double f = rotation_stripped_fidelity(four_crystal_channel(dephasing_locus_angles(t)),
                                                dephasing_channel({p_of_theta1(t)}));
    if (f < worst) {
      worst = f;
      at = t;
    }
  }
  return {worst >= 0.996, fmt("min fidelity %.5f at theta1 = %.3f deg over 201 samples", worst, at)};
}

Outcome eigenvalue_structure() {
  double smallest = 0.0;
  for (const LocusPoint& pt : locus_scan(45.0, 901)) smallest = std::max(smallest, std::abs(pt.chi_eigenvalues(3)));

  double second = 0.0;
  double best_gap = 1.0;
  double crossing = 0.0;
  for (const LocusPoint& pt : locus_scan(10.0, 1001)) {
    if (pt.theta1_deg <= 9.0) second = std::max(second, pt.chi_eigenvalues(2));
    const double gap = pt.chi_eigenvalues(0) - pt.chi_eigenvalues(1);
    if (gap < best_gap) {
      best_gap = gap;
      crossing = pt.theta1_deg;
    }
  }
  return {smallest < 1e-10 && second <= 0.005 && std::abs(crossing - 8.82) <= 0.1,
          fmt("max smallest %.1e, max second-smallest %.5f on [0,9], top two cross at %.3f deg", smallest,
              second, crossing)};
}

Outcome edge_unattainable() {
  bool ok = true;
  std::string detail = "fidelity to edge:";
  for (double p : {0.1, 0.2, 0.3, 0.4}) {
    const TargetSearchResult r = find_angles_for_target({1.0 - 2.0 * p, 1.0 - 2.0 * p, 1.0});
    ok = ok && r.fidelity >= 0.996 && r.fidelity <= 1.0 - 1e-6;
    detail += fmt(" P=%.1f %.7f", p, r.fidelity);
  }
  return {ok, detail};
}

Outcome tomography_round_trip() {
  std::mt19937_64 rng(314159);
  double worst = 1.0;
  AcquisitionConfig exact;
  exact.integration_s = 1e4;
  for (int i = 0; i < 50; ++i) {
    const ProcessMatrix truth = chi_from_kraus(KrausSet{oracle::random_kraus(rng, 1 + i % 4)});
    worst = std::min(worst, process_fidelity(qpt(expected_counts(truth, exact)).chi, truth));
  }

  std::vector<LabelledChannel> family;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.9 * k;
    family.push_back({fmt("%.1f", t), four_crystal_channel(dephasing_locus_angles(t))});
  }
  AcquisitionConfig realistic;
  realistic.coincidence_rate_hz = 1000.0;
  realistic.integration_s = 10.0;
  realistic.seed = 97;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = eigenvalue_curve(family, realistic);
  const double elapsed = seconds_since(t0);

  std::vector<double> f;
  for (const EigenvalueCurveRow& row : rows)
    if (row.mode == CountMode::coincidence) f.push_back(row.fidelity);
  const double mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
  double var = 0.0;
  for (double x : f) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(f.size() - 1));

  const bool ok = worst >= 0.9999 && mean >= 0.95 && mean <= 0.995 && sd <= 0.03 && elapsed < 300.0;
  return {ok, fmt("noiseless worst %.8f over 50 channels; Poisson mean %.4f sd %.4f over %zu channels "
                  "(band [0.95, 0.995]); curve run %.1f s",
                  worst, mean, sd, f.size(), elapsed)};
}

Outcome tetrahedron_legality() {
  SweepConfig c;
  c.grid_points_per_angle = 50;
  c.symmetry_extension = false;
  const ReachabilityCloud raw = sweep(c);
  c.symmetry_extension = true;
  const ReachabilityCloud extended = sweep(c);

  auto all_cp = [](const ReachabilityCloud& cloud) {
    return std::all_of(cloud.points.begin(), cloud.points.end(),
                       [](const DVector& d) { return is_complete_positive(d, 1e-12); });
  };
  auto has = [](const ReachabilityCloud& cloud, const DVector& target) {
    return std::any_of(cloud.points.begin(), cloud.points.end(),
                       [&](const DVector& d) { return max_abs_diff(d, target) <= 1e-12; });
  };
  const bool ok = all_cp(raw) && all_cp(extended) && has(extended, {1, 1, 1}) && has(raw, {1, -1, -1});
  return {ok, fmt("%zu raw and %zu extended points; all inside: %s/%s; (1,1,1) in extended: %s; "
                  "(1,-1,-1) in raw: %s",
                  raw.points.size(), extended.points.size(), all_cp(raw) ? "yes" : "no",
                  all_cp(extended) ? "yes" : "no", has(extended, {1, 1, 1}) ? "yes" : "no",
                  has(raw, {1, -1, -1}) ? "yes" : "no")};
}

double time_to_quarter(const WavePacket& packet) {
  double lo = 0.0;
  double hi = 20.0 * packet.coherence_time_fs;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sbc_dephasing_probability(mid, packet) < 0.25 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome sbc_properties() {
  const WavePacket q = quantum_packet();
  const WavePacket k = classical_packet();
  double p0 = 0.0;
  double tail = 0.0;
  double zero_eigs = 0.0;
  for (const WavePacket& w : {q, k}) {
    p0 = std::max(p0, std::abs(sbc_dephasing_probability(0.0, w)));
    for (double m = 6.0; m <= 30.0; m += 0.5)
      tail = std::max(tail, std::abs(sbc_dephasing_probability(m * w.coherence_time_fs, w) - 0.5));
    for (double t = 0.0; t <= 1000.0; t += 2.5) {
      const Vec4 e = sbc_channel(t, w).eigenvalues();
      zero_eigs = std::max({zero_eigs, std::abs(e(2)), std::abs(e(3))});
    }
  }
  const double tq = time_to_quarter(q);
  const double tk = time_to_quarter(k);
  const bool ok = p0 <= 1e-12 && tail <= 1e-6 && zero_eigs < 1e-10 && tk < tq &&
                  k.coherence_time_fs < q.coherence_time_fs;
  return {ok, fmt("P(0) %.1e, max |P-0.5| beyond 6 tau %.1e, max two smallest |eig| %.1e, P=0.25 at %.1f fs "
                  "(tau %.0f) vs %.1f fs (tau %.0f)",
                  p0, tail, zero_eigs, tk, k.coherence_time_fs, tq, q.coherence_time_fs)};
}

Outcome wavelength_fit() {
  const WavePacket q = quantum_packet();
  const double period = q.center_wavelength_nm / kSpeedOfLightNmPerFs;
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto samples = synthetic_s2_samples(q, 0.0, 5.0 * period, 200, 0.02, seed);
    const WavelengthFit fit = fit_wavelength(samples);
    const bool within = std::abs(fit.wavelength_nm - 780.0) <= 0.01 * 780.0;
    const bool covers = std::abs(fit.wavelength_nm - 780.0) <= 2.0 * fit.uncertainty_nm;
    ok = ok && within && covers;
    detail += fmt("%s%.2f +- %.2f nm", detail.empty() ? "" : ", ", fit.wavelength_nm, 2.0 * fit.uncertainty_nm);
  }
  return {ok, "5 periods, 2% noise: " + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"simulator matches closed-form D", simulator_vs_closed_form},
      {"dephasing probability anchors", dephasing_probability_anchors},
      {"locus fidelity", locus_fidelity},
      {"locus eigenvalue structure", eigenvalue_structure},
      {"dephasing edge unattainable", edge_unattainable},
      {"tomography round trip", tomography_round_trip},
      {"tetrahedron legality", tetrahedron_legality},
      {"SBC properties", sbc_properties},
      {"S2 wavelength fit", wavelength_fit},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
