#include "polchan/reachability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numbers>
#include <random>
#include <tuple>

#include "polchan/error.hpp"
#include "polchan/optimize.hpp"
#include "polchan/parallel.hpp"

namespace polchan {

void SweepConfig::validate() const {
  if (grid_points_per_angle < 2)
    throw Error(ErrorKind::InvalidArgument, "grid_points_per_angle must be at least 2");
  if (!std::isfinite(angle_min_deg) || !std::isfinite(angle_max_deg) ||
      !(angle_max_deg > angle_min_deg))
    throw Error(ErrorKind::InvalidArgument, "angle range must be a non-empty finite interval");
}

std::vector<double> SweepConfig::grid() const {
  validate();
  std::vector<double> out(static_cast<std::size_t>(grid_points_per_angle));
  const double step = (angle_max_deg - angle_min_deg) / grid_points_per_angle;
  for (int k = 0; k < grid_points_per_angle; ++k)
    out[static_cast<std::size_t>(k)] = angle_min_deg + k * step;
  return out;
}

std::array<DVector, 12> symmetry_orbit(const DVector& d) {
  std::array<DVector, 12> out;
  const std::array<DVector, 3> rotations = {DVector{d.d1, d.d2, d.d3}, DVector{d.d2, d.d3, d.d1},
                                            DVector{d.d3, d.d1, d.d2}};
  std::size_t k = 0;
  for (const DVector& r : rotations)
    for (const DVector& f : sign_flip_orbit(r)) out[k++] = f;
  return out;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ReachabilityCloud sweep(const SweepConfig& config, unsigned threads) {
  const std::vector<double> grid = config.grid();
  const std::size_t n = grid.size();
  const std::size_t per_point = config.symmetry_extension ? 12 : 1;

  ReachabilityCloud cloud;
  cloud.config = config;
  cloud.timestamp = utc_timestamp();
  cloud.raw_count = n * n * n;
  cloud.points.resize(cloud.raw_count * per_point);
  parallel_for(
      n,
      [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k) {
            const DVector d = analytic_d(WavePlateAngles(grid[i], grid[j], grid[k]));
            const std::size_t slot = ((i * n + j) * n + k) * per_point;
            if (per_point == 1) {
              cloud.points[slot] = d;
            } else {
              const auto orbit = symmetry_orbit(d);
              std::copy(orbit.begin(), orbit.end(), cloud.points.begin() + static_cast<long>(slot));
            }
          }
      },
      threads);
  return cloud;
}

double coverage_fraction(const ReachabilityCloud& cloud, int resolution) {
  if (cloud.points.empty()) throw Error(ErrorKind::InvalidArgument, "empty cloud");
  if (resolution < 1) throw Error(ErrorKind::InvalidArgument, "resolution must be positive");
  const auto res = static_cast<std::size_t>(resolution);
  auto cell = [&](double x) {
    const double f = std::floor((x + 1.0) / 2.0 * resolution);
    return static_cast<std::size_t>(std::clamp(f, 0.0, resolution - 1.0));
  };
  auto center = [&](std::size_t i) { return -1.0 + (2.0 * static_cast<double>(i) + 1.0) / resolution; };

  std::vector<char> hit(res * res * res, 0);
  for (const DVector& p : cloud.points) hit[(cell(p.d1) * res + cell(p.d2)) * res + cell(p.d3)] = 1;

  std::size_t inside = 0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < res; ++i)
    for (std::size_t j = 0; j < res; ++j)
      for (std::size_t k = 0; k < res; ++k) {
        if (!is_complete_positive({center(i), center(j), center(k)}, 0.0)) continue;
        ++inside;
        if (hit[(i * res + j) * res + k]) ++covered;
      }
  return inside == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(inside);
}

WavePlateAngles dephasing_locus_angles(double theta1_deg) {
  if (!(theta1_deg >= 0.0 && theta1_deg <= 45.0))
    throw Error(ErrorKind::OutOfRange, "locus angle must lie in [0, 45] degrees");
  return {theta1_deg, 2.0 * theta1_deg, theta1_deg};
}

double p_of_theta1(double theta1_deg) {
  const double c = std::cos(4.0 * theta1_deg * std::numbers::pi / 180.0);
  const double c2 = c * c;
  return (-3.0 * c2 * c2 + 2.0 * c2 + 1.0) / 2.0;
}

std::vector<LocusPoint> locus_scan(double theta1_max_deg, int steps, unsigned threads) {
  if (steps < 2) throw Error(ErrorKind::InvalidArgument, "locus scan needs at least 2 steps");
  dephasing_locus_angles(theta1_max_deg);
  std::vector<LocusPoint> out(static_cast<std::size_t>(steps));
  parallel_for(
      out.size(),
      [&](std::size_t k) {
        LocusPoint& pt = out[k];
        pt.theta1_deg = theta1_max_deg * static_cast<double>(k) / (steps - 1);
        pt.angles = dephasing_locus_angles(pt.theta1_deg);
        pt.p = p_of_theta1(pt.theta1_deg);
        pt.chi_eigenvalues = four_crystal_channel(pt.angles).eigenvalues();
      },
      threads);
  return out;
}

namespace {

// chi eigenvalues of the Pauli-diagonal channel with coordinates d, descending.
std::array<double, 4> diagonal_chi_spectrum(const DVector& d) {
  std::array<double, 4> e = {(1.0 + d.d1 + d.d2 + d.d3) / 4.0, (1.0 + d.d1 - d.d2 - d.d3) / 4.0,
                             (1.0 - d.d1 + d.d2 - d.d3) / 4.0, (1.0 - d.d1 - d.d2 + d.d3) / 4.0};
  std::sort(e.begin(), e.end(), std::greater<>());
  return e;
}

bool lexicographically_less(const WavePlateAngles& a, const WavePlateAngles& b) {
  return std::tie(a.degrees()[0], a.degrees()[1], a.degrees()[2]) <
         std::tie(b.degrees()[0], b.degrees()[1], b.degrees()[2]);
}

}  // namespace

double canonical_fidelity(const DVector& a, const DVector& b) {
  const auto ea = diagonal_chi_spectrum(a);
  const auto eb = diagonal_chi_spectrum(b);
  double root = 0.0;
  for (std::size_t i = 0; i < 4; ++i) root += std::sqrt(std::max(0.0, ea[i]) * std::max(0.0, eb[i]));
  return std::clamp(root * root, 0.0, 1.0);
}

TargetSearchResult find_angles_for_target(const DVector& target,
                                          const TargetSearchOptions& options) {
  if (!is_complete_positive(target))
    throw Error(ErrorKind::TargetNotCP, "target D vector violates complete positivity");
  if (options.restarts < 1 || options.grid_points < 2)
    throw Error(ErrorKind::InvalidArgument, "restarts and grid_points must be positive");

  auto infidelity = [&](const optim::Vector& deg) {
    return 1.0 - canonical_fidelity(target, analytic_d(WavePlateAngles(deg(0), deg(1), deg(2))));
  };

  // Coarse grid, best points first.
  const int g = options.grid_points;
  const double spacing = 180.0 / g;
  struct Seed {
    double value;
    std::array<double, 3> deg;
  };
  std::vector<Seed> seeds;
  seeds.reserve(static_cast<std::size_t>(g * g * g));
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      for (int k = 0; k < g; ++k) {
        const std::array<double, 3> deg = {i * spacing, j * spacing, k * spacing};
        seeds.push_back({infidelity(optim::Vector::Map(deg.data(), 3)), deg});
      }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const Seed& a, const Seed& b) { return a.value < b.value; });

  // Symmetric copies of a basin share their grid values, so seeds are taken
  // best first with one representative per distinct value.
  const auto restarts = static_cast<std::size_t>(options.restarts);
  std::vector<const Seed*> chosen;
  for (const Seed& s : seeds) {
    if (chosen.size() == restarts) break;
    if (chosen.empty() || s.value > chosen.back()->value + 1e-12) chosen.push_back(&s);
  }
  for (std::size_t i = 0; chosen.size() < restarts; ++i) chosen.push_back(&seeds[i % seeds.size()]);

  std::vector<optim::NelderMeadResult> runs(restarts);
  parallel_for(
      restarts,
      [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(options.seed, r));
        std::uniform_real_distribution<double> jitter(-0.5 * spacing, 0.5 * spacing);
        const Seed& s = *chosen[r];
        optim::Vector x0(3);
        for (int a = 0; a < 3; ++a) x0(a) = s.deg[static_cast<std::size_t>(a)] + jitter(rng);
        optim::NelderMeadOptions nm;
        nm.initial_step = 0.5 * spacing;
        runs[r] = optim::minimize_nelder_mead(infidelity, x0, nm);
      },
      options.threads);

  TargetSearchResult best;
  double best_value = std::numeric_limits<double>::infinity();
  int evaluations = g * g * g;
  for (const auto& run : runs) {
    evaluations += run.evaluations;
    const WavePlateAngles angles(run.x(0), run.x(1), run.x(2));
    const bool better = run.value < best_value - 1e-12;
    const bool tie = std::abs(run.value - best_value) <= 1e-12;
    if (better || (tie && lexicographically_less(angles, best.angles))) {
      best_value = run.value;
      best.angles = angles;
    }
  }

  const ProcessMatrix chi = four_crystal_channel(best.angles);
  best.achieved = d_vector(d_matrix_from_chi(chi).d);
  best.fidelity = rotation_stripped_fidelity(chi, chi_from_d_vector(target));
  best.evaluations = evaluations;
  return best;
}

namespace {

std::array<double, 3> sorted_lengths(const optim::Vector& deg) {
  const DVector d = analytic_d(WavePlateAngles(deg(0), deg(1), deg(2)));
  std::array<double, 3> a = {std::abs(d.d1), std::abs(d.d2), std::abs(d.d3)};
  std::sort(a.begin(), a.end(), std::greater<>());
  return a;
}

// Drives the two smaller lengths onto `edge` with minimum-norm Gauss-Newton steps.
double polish_constraints(optim::Vector& deg, double edge) {
  auto residual = [edge](const optim::Vector& x) {
    const auto a = sorted_lengths(x);
    return Eigen::Vector2d(a[1] - edge, a[2] - edge);
  };
  Eigen::Vector2d r = residual(deg);
  for (int it = 0; it < 50 && r.lpNorm<Eigen::Infinity>() > 1e-14; ++it) {
    Eigen::Matrix<double, 2, 3> jac;
    constexpr double h = 1e-7;
    for (int a = 0; a < 3; ++a) {
      optim::Vector xp = deg;
      optim::Vector xm = deg;
      xp(a) += h;
      xm(a) -= h;
      jac.col(a) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    const Eigen::Vector3d step = jac.completeOrthogonalDecomposition().solve(r);
    deg -= step;
    r = residual(deg);
  }
  return r.lpNorm<Eigen::Infinity>();
}

}  // namespace

EdgeProbe probe_dephasing_edge(double p, int restarts, std::uint64_t seed, unsigned threads) {
  if (!(p > 0.0 && p < 0.5)) throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 0.5)");
  if (restarts < 1) throw Error(ErrorKind::InvalidArgument, "restarts must be positive");
  const double edge = 1.0 - 2.0 * p;

  std::vector<EdgeProbe> probes(static_cast<std::size_t>(restarts));
  parallel_for(
      probes.size(),
      [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(seed, r));
        std::uniform_real_distribution<double> angle(0.0, 180.0);
        optim::Vector x(3);
        for (int a = 0; a < 3; ++a) x(a) = angle(rng);
        optim::NelderMeadOptions nm;
        nm.initial_step = 5.0;
        for (double weight : {1e2, 1e4, 1e6, 1e8}) {
          auto objective = [&](const optim::Vector& deg) {
            const auto a = sorted_lengths(deg);
            return -a[0] + weight * ((a[1] - edge) * (a[1] - edge) + (a[2] - edge) * (a[2] - edge));
          };
          x = optim::minimize_nelder_mead(objective, x, nm).x;
          nm.initial_step = std::max(1e-3, 0.1 * nm.initial_step);
        }
        EdgeProbe& probe = probes[r];
        probe.p = p;
        probe.constraint_residual = polish_constraints(x, edge);
        probe.angles = WavePlateAngles(x(0), x(1), x(2));
        probe.max_length = sorted_lengths(x)[0];
      },
      threads);

  EdgeProbe best;
  best.p = p;
  best.constraint_residual = std::numeric_limits<double>::infinity();
  for (const EdgeProbe& probe : probes) {
    if (probe.constraint_residual > 1e-10) continue;
    if (probe.max_length > best.max_length) best = probe;
  }
  if (!std::isfinite(best.constraint_residual))
    throw Error(ErrorKind::NonConvergence, "no start satisfied the edge constraints");
  return best;
}

}  // namespace polchan
