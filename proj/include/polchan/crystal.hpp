#pragma once

#include <array>
#include <string_view>

#include "polchan/channel.hpp"
#include "polchan/linalg.hpp"

namespace polchan {

/// Half-wave-plate angles in degrees, each reduced to [0, 180).
class WavePlateAngles {
 public:
  WavePlateAngles() = default;
  WavePlateAngles(double theta1, double theta2, double theta3);

  double theta1() const { return deg_[0]; }
  double theta2() const { return deg_[1]; }
  double theta3() const { return deg_[2]; }
  double operator[](int i) const { return deg_[static_cast<std::size_t>(i)]; }
  std::array<double, 3> degrees() const { return deg_; }
  std::array<double, 3> radians() const;

 private:
  std::array<double, 3> deg_{0.0, 0.0, 0.0};
};

enum class SlowAxis { horizontal, vertical };

std::string_view to_string(SlowAxis axis);

struct Crystal {
  int delay_bins = 1;
  SlowAxis slow_axis = SlowAxis::horizontal;
  double residual_phase = 0.0;  // radians, applied to the slow-axis component
};

/// Four crystals with a half-wave plate between each neighbouring pair.
struct CrystalStack {
  std::array<Crystal, 4> crystals;
  /// Delay of one bin (a 1 mm calcite crystal at 780 nm).
  double base_delay_fs = 570.0;

  /// Delays (1, 2, 2, 1) with slow axes (v, h, v, h).
  static CrystalStack standard();

  /// 1 + total delay.
  int bin_count() const;

  /// Throws InvalidArgument if any delay is not positive.
  void validate() const;
};

/// Real Jones matrix [[cos 2t, sin 2t], [sin 2t, -cos 2t]] (global phase dropped).
Eigen::Matrix2d hwp_matrix(double theta_deg);

/// Joint polarization x time-bin amplitudes of a single photon.
class TemporalState {
 public:
  TemporalState(const Eigen::Vector2cd& polarization, int bins);

  int bins() const { return static_cast<int>(amps_.cols()); }
  const Eigen::Matrix<cd, 2, Eigen::Dynamic>& amplitudes() const { return amps_; }
  double norm() const { return amps_.norm(); }

  /// Delays the slow-axis component by `crystal.delay_bins` bins. Amplitude
  /// pushed past the last bin is an error.
  void apply(const Crystal& crystal);
  void apply_hwp(double theta_deg);

 private:
  Eigen::Matrix<cd, 2, Eigen::Dynamic> amps_;
};

/// One Kraus operator per time bin: column j of K_m holds the bin-m amplitudes
/// produced by input polarization j. Zero operators are kept.
KrausSet four_crystal_kraus(const WavePlateAngles& angles,
                            const CrystalStack& stack = CrystalStack::standard());

ProcessMatrix four_crystal_channel(const WavePlateAngles& angles,
                                   const CrystalStack& stack = CrystalStack::standard());

/// Closed-form D1, D2, D3 of the four-crystal scheme as functions of the plate
/// angles. Valid up to rotations that flip the sign of two components.
DVector analytic_d(const WavePlateAngles& angles);

/// Diagonal of a simulated D matrix reordered to the labelling of analytic_d:
/// (D_11, D_33, D_22). The closed form's second component is the circular
/// (S3) axis and its third the diagonal (S2) axis.
DVector diagonal_in_analytic_order(const DMatrix& d);

/// Largest off-diagonal magnitude of D.
double off_diagonal_norm(const DMatrix& d);

/// Bins are treated as orthogonal; that needs base delay >= 2 * coherence time.
bool discrete_mode_condition_holds(double base_delay_fs, double coherence_time_fs);

/// Writes a warning to std::clog and returns false when the condition fails.
bool check_discrete_mode_condition(double base_delay_fs, double coherence_time_fs);

}  // namespace polchan
