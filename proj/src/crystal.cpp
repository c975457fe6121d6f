#include "polchan/crystal.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

#include "polchan/error.hpp"

namespace polchan {

namespace {

double reduce_degrees(double deg) {
  if (!std::isfinite(deg)) throw Error(ErrorKind::InvalidArgument, "non-finite plate angle");
  double r = std::fmod(deg, 180.0);
  if (r < 0.0) r += 180.0;
  if (r >= 180.0) r = 0.0;
  return r;
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

WavePlateAngles::WavePlateAngles(double theta1, double theta2, double theta3)
    : deg_{reduce_degrees(theta1), reduce_degrees(theta2), reduce_degrees(theta3)} {}

std::array<double, 3> WavePlateAngles::radians() const {
  return {deg_[0] * kDegToRad, deg_[1] * kDegToRad, deg_[2] * kDegToRad};
}

std::string_view to_string(SlowAxis axis) {
  return axis == SlowAxis::horizontal ? "h" : "v";
}

CrystalStack CrystalStack::standard() {
  CrystalStack stack;
  stack.crystals = {Crystal{1, SlowAxis::vertical, 0.0}, Crystal{2, SlowAxis::horizontal, 0.0},
                    Crystal{2, SlowAxis::vertical, 0.0}, Crystal{1, SlowAxis::horizontal, 0.0}};
  return stack;
}

int CrystalStack::bin_count() const {
  int total = 1;
  for (const Crystal& c : crystals) total += c.delay_bins;
  return total;
}

void CrystalStack::validate() const {
  for (const Crystal& c : crystals) {
    if (c.delay_bins <= 0)
      throw Error(ErrorKind::InvalidArgument, "crystal delay must be a positive number of bins");
    if (!std::isfinite(c.residual_phase))
      throw Error(ErrorKind::InvalidArgument, "non-finite residual phase");
  }
  if (!(base_delay_fs > 0.0)) throw Error(ErrorKind::InvalidArgument, "base delay must be positive");
}

Eigen::Matrix2d hwp_matrix(double theta_deg) {
  const double a = 2.0 * theta_deg * kDegToRad;
  Eigen::Matrix2d m;
  m << std::cos(a), std::sin(a), std::sin(a), -std::cos(a);
  return m;
}

TemporalState::TemporalState(const Eigen::Vector2cd& polarization, int bins)
    : amps_(Eigen::Matrix<cd, 2, Eigen::Dynamic>::Zero(2, bins)) {
  amps_.col(0) = polarization;
}

void TemporalState::apply(const Crystal& crystal) {
  const int row = crystal.slow_axis == SlowAxis::horizontal ? 0 : 1;
  const int shift = crystal.delay_bins;
  const int n = bins();
  for (int b = n - shift; b < n; ++b) {
    if (amps_(row, b) != cd(0.0))
      throw Error(ErrorKind::OutOfRange, "delay pushes amplitude past the last time bin");
  }
  const cd phase = std::polar(1.0, crystal.residual_phase);
  for (int b = n - 1; b >= shift; --b) amps_(row, b) = phase * amps_(row, b - shift);
  for (int b = 0; b < shift; ++b) amps_(row, b) = 0.0;
}

void TemporalState::apply_hwp(double theta_deg) {
  amps_ = hwp_matrix(theta_deg).cast<cd>() * amps_;
}

KrausSet four_crystal_kraus(const WavePlateAngles& angles, const CrystalStack& stack) {
  stack.validate();
  const int bins = stack.bin_count();
  KrausSet out;
  out.operators.assign(static_cast<std::size_t>(bins), Mat2c::Zero());
  for (int input = 0; input < 2; ++input) {
    Eigen::Vector2cd pol = Eigen::Vector2cd::Zero();
    pol(input) = 1.0;
    TemporalState state(pol, bins);
    for (int c = 0; c < 4; ++c) {
      state.apply(stack.crystals[static_cast<std::size_t>(c)]);
      if (c < 3) state.apply_hwp(angles[c]);
    }
    for (int b = 0; b < bins; ++b)
      out.operators[static_cast<std::size_t>(b)].col(input) = state.amplitudes().col(b);
  }
  return out;
}

ProcessMatrix four_crystal_channel(const WavePlateAngles& angles, const CrystalStack& stack) {
  return chi_from_kraus(four_crystal_kraus(angles, stack));
}

DVector analytic_d(const WavePlateAngles& angles) {
  const auto [t1, t2, t3] = angles.radians();
  using std::cos;
  using std::sin;
  const double c2t2 = cos(2.0 * t2);
  const double s2t2 = sin(2.0 * t2);
  const double sum13 = 2.0 * t1 + 2.0 * t3;
  const double outer = sin(4.0 * t1) * sin(4.0 * t3);
  const double cross = sin(4.0 * t2) * sin(sum13) * cos(2.0 * t1) * cos(2.0 * t3);
  const double common = -c2t2 * c2t2 * cos(sum13) * cos(sum13) - 0.5 * outer * s2t2 * s2t2;

  DVector d;
  d.d1 = -outer * c2t2 * c2t2 + cos(4.0 * t1) * cos(4.0 * t2) * cos(4.0 * t3);
  d.d2 = cross + common;
  d.d3 = -cross + common;
  return d;
}

DVector diagonal_in_analytic_order(const DMatrix& d) { return {d.m(0, 0), d.m(2, 2), d.m(1, 1)}; }

double off_diagonal_norm(const DMatrix& d) {
  Mat3 off = d.m;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff();
}

bool discrete_mode_condition_holds(double base_delay_fs, double coherence_time_fs) {
  return base_delay_fs >= 2.0 * coherence_time_fs;
}

bool check_discrete_mode_condition(double base_delay_fs, double coherence_time_fs) {
  if (discrete_mode_condition_holds(base_delay_fs, coherence_time_fs)) return true;
  std::clog << "warning: base delay " << base_delay_fs << " fs is shorter than twice the "
            << "coherence time " << coherence_time_fs
            << " fs; time bins overlap and the orthogonal-bin model is inaccurate\n";
  return false;
}

}  // namespace polchan
