#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "polchan/channel.hpp"
#include "polchan/crystal.hpp"

namespace polchan {

struct SweepConfig {
  int grid_points_per_angle = 50;
  /// Each angle takes grid_points_per_angle values evenly spaced over
  /// [angle_min_deg, angle_max_deg).
  double angle_min_deg = 0.0;
  double angle_max_deg = 180.0;
  bool symmetry_extension = false;

  void validate() const;
  std::vector<double> grid() const;
};

struct ReachabilityCloud {
  std::vector<DVector> points;
  SweepConfig config;
  /// UTC, ISO 8601.
  std::string timestamp;
  std::uint64_t seed = 0;
  /// Number of grid evaluations before symmetry extension.
  std::size_t raw_count = 0;
};

/// The 12 images of d under cyclic permutations combined with pairwise sign flips.
std::array<DVector, 12> symmetry_orbit(const DVector& d);

/// Closed-form D vectors over the full angle grid, ordered with theta3 varying
/// fastest. With symmetry_extension every raw point is followed by the other
/// 11 elements of its orbit.
ReachabilityCloud sweep(const SweepConfig& config, unsigned threads = 0);

/// Fraction of the voxels of [-1, 1]^3 (resolution^3 of them) whose centers lie
/// inside the tetrahedron and which contain at least one cloud point.
/// InvalidArgument for an empty cloud or resolution < 1.
double coverage_fraction(const ReachabilityCloud& cloud, int resolution = 20);

/// (theta1, 2 theta1, theta1). OutOfRange unless 0 <= theta1 <= 45 degrees.
WavePlateAngles dephasing_locus_angles(double theta1_deg);

/// Dephasing probability along the locus: (1 + 2 cos^2(4 t) - 3 cos^4(4 t)) / 2.
double p_of_theta1(double theta1_deg);

struct LocusPoint {
  double theta1_deg = 0.0;
  WavePlateAngles angles;
  double p = 0.0;
  /// Eigenvalues of the simulated chi, descending.
  Vec4 chi_eigenvalues = Vec4::Zero();
};

/// `steps` evenly spaced points over [0, theta1_max_deg], simulated with the
/// temporal-bin model. InvalidArgument if steps < 2.
std::vector<LocusPoint> locus_scan(double theta1_max_deg, int steps, unsigned threads = 0);

struct TargetSearchOptions {
  int restarts = 32;
  std::uint64_t seed = 0;
  /// Seeds are drawn from the best points of a grid_points^3 angle grid.
  int grid_points = 16;
  unsigned threads = 0;
};

struct TargetSearchResult {
  WavePlateAngles angles;
  /// Canonical D vector of the simulated channel at `angles`.
  DVector achieved;
  /// Process fidelity to the target after rotation stripping.
  double fidelity = 0.0;
  int evaluations = 0;
};

/// Plate angles whose channel is closest to the target in rotation-stripped
/// process fidelity. Equal fidelities resolve to the lexicographically smallest
/// angles. TargetNotCP if the target lies outside the tetrahedron.
TargetSearchResult find_angles_for_target(const DVector& target,
                                          const TargetSearchOptions& options = {});

/// Rotation-stripped process fidelity between the Pauli-diagonal channels with
/// the given D vectors (not necessarily canonical).
double canonical_fidelity(const DVector& a, const DVector& b);

struct EdgeProbe {
  double p = 0.0;
  /// Largest |D_k| found with the other two magnitudes equal to 1 - 2p.
  double max_length = 0.0;
  WavePlateAngles angles;
  /// Worst residual of the two equality constraints at `angles`.
  double constraint_residual = 0.0;
};

/// Constrained search over the plate angles for the channel closest to the
/// dephasing edge (1 - 2p, 1 - 2p, 1).
EdgeProbe probe_dephasing_edge(double p, int restarts = 64, std::uint64_t seed = 0,
                               unsigned threads = 0);

}  // namespace polchan
