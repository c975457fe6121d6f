#include "polchan/sbc.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "polchan/error.hpp"

namespace polchan {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

void WavePacket::validate() const {
  if (!(center_wavelength_nm > 0.0) || !std::isfinite(center_wavelength_nm))
    throw Error(ErrorKind::InvalidArgument, "center wavelength must be positive");
  if (!(coherence_time_fs > 0.0) || !std::isfinite(coherence_time_fs))
    throw Error(ErrorKind::InvalidArgument, "coherence time must be positive");
}

WavePacket quantum_packet() { return {780.0, 180.0, SpectralModel::gaussian}; }

WavePacket classical_packet() { return {780.0, 120.0, SpectralModel::gaussian}; }

std::string_view to_string(Compensator c) {
  switch (c) {
    case Compensator::perpendicular: return "perpendicular";
    case Compensator::omitted: return "omitted";
    case Compensator::parallel: return "parallel";
  }
  return "?";
}

double SbcGeometry::max_translation_mm() const {
  const double span_path_mm = wedge_span_fs * kSpeedOfLightNmPerFs / delta_n * 1e-6;
  return span_path_mm / std::tan(wedge_angle_deg * std::numbers::pi / 180.0);
}

void SbcGeometry::validate() const {
  if (!(wedge_angle_deg > 0.0 && wedge_angle_deg < 90.0))
    throw Error(ErrorKind::InvalidArgument, "wedge angle must lie in (0, 90) degrees");
  if (!(delta_n > 0.0)) throw Error(ErrorKind::InvalidArgument, "birefringence must be positive");
  if (!(compensator_length_mm >= 0.0) || !(wedge_base_path_mm >= 0.0) || !(wedge_span_fs > 0.0))
    throw Error(ErrorKind::InvalidArgument, "negative SBC length");
}

double sbc_delay(const SbcGeometry& geometry) {
  geometry.validate();
  const double max_travel = geometry.max_translation_mm();
  if (!(geometry.translation_mm >= 0.0 && geometry.translation_mm <= max_travel * (1.0 + 1e-12)))
    throw Error(ErrorKind::OutOfRange, "wedge translation " + std::to_string(geometry.translation_mm) +
                                           " mm outside [0, " + std::to_string(max_travel) + "] mm");
  const double wedge_path =
      geometry.wedge_base_path_mm +
      geometry.translation_mm * std::tan(geometry.wedge_angle_deg * std::numbers::pi / 180.0);
  double path = wedge_path;
  if (geometry.compensator == Compensator::perpendicular) path -= geometry.compensator_length_mm;
  if (geometry.compensator == Compensator::parallel) path += geometry.compensator_length_mm;
  return path * 1e6 * geometry.delta_n / kSpeedOfLightNmPerFs;
}

cd coherence(double t_fs, const WavePacket& packet) {
  packet.validate();
  const double tau = packet.coherence_time_fs;
  const double envelope = std::exp(-t_fs * t_fs / (2.0 * tau * tau));
  const double phase = kTwoPi * kSpeedOfLightNmPerFs * t_fs / packet.center_wavelength_nm;
  return std::polar(envelope, phase);
}

double sbc_dephasing_probability(double t_fs, const WavePacket& packet) {
  return 0.5 * (1.0 - std::abs(coherence(t_fs, packet)));
}

ProcessMatrix sbc_channel(double t_fs, const WavePacket& packet) {
  if (!(t_fs >= 0.0)) throw Error(ErrorKind::InvalidArgument, "delay must be non-negative");
  const cd gamma = coherence(t_fs, packet);
  const double g = std::abs(gamma);
  const double phi = std::arg(gamma);
  Mat2c u = Mat2c::Zero();
  u(0, 0) = std::polar(1.0, phi / 2.0);
  u(1, 1) = std::polar(1.0, -phi / 2.0);
  KrausSet kraus;
  kraus.operators.push_back(std::sqrt((1.0 + g) / 2.0) * u);
  kraus.operators.push_back(std::sqrt((1.0 - g) / 2.0) * u * sigma(1));
  return chi_from_kraus(kraus);
}

std::vector<CurvePoint> s2_curve(const std::vector<double>& t_samples_fs, const WavePacket& packet,
                                 const DensityMatrix& input) {
  input.validate(Tolerances{}.input);
  std::vector<CurvePoint> out;
  out.reserve(t_samples_fs.size());
  for (double t : t_samples_fs) {
    const DensityMatrix rho = apply_channel(sbc_channel(t, packet), input);
    out.push_back({t, stokes_from_density(rho).s2});
  }
  return out;
}

std::vector<CurvePoint> synthetic_s2_samples(const WavePacket& packet, double t_start_fs,
                                             double t_stop_fs, int count, double noise_sigma,
                                             std::uint64_t seed) {
  if (count < 2) throw Error(ErrorKind::InvalidArgument, "need at least two samples");
  std::vector<double> ts(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    ts[static_cast<std::size_t>(i)] = t_start_fs + (t_stop_fs - t_start_fs) * i / (count - 1);
  std::vector<CurvePoint> out = s2_curve(ts, packet, basis_state(BasisLabel::p));
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (CurvePoint& p : out) p.value += noise(rng);
  }
  return out;
}

namespace {

// Residuals of V exp(-a t^2) cos(w (t - tc) + psi) - y, parameters (V, a, w, psi).
// `a` is carried in units of 1/scale^2 to keep the columns comparable.
struct SinusoidResiduals : Eigen::DenseFunctor<double> {
  const std::vector<CurvePoint>* samples;
  double t_center;
  double t_scale;

  SinusoidResiduals(const std::vector<CurvePoint>& s, double tc, double scale)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(s.size())),
        samples(&s),
        t_center(tc),
        t_scale(scale) {}

  int operator()(const InputType& x, ValueType& fvec) const {
    for (std::size_t i = 0; i < samples->size(); ++i) {
      const double t = (*samples)[i].t_fs;
      const double u = t / t_scale;
      fvec(static_cast<Eigen::Index>(i)) =
          x(0) * std::exp(-x(1) * u * u) * std::cos(x(2) * (t - t_center) + x(3)) -
          (*samples)[i].value;
    }
    return 0;
  }

  int df(const InputType& x, JacobianType& jac) const {
    for (std::size_t i = 0; i < samples->size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double t = (*samples)[i].t_fs;
      const double u = t / t_scale;
      const double env = std::exp(-x(1) * u * u);
      const double arg = x(2) * (t - t_center) + x(3);
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      jac(r, 0) = env * c;
      jac(r, 1) = -x(0) * u * u * env * c;
      jac(r, 2) = -x(0) * env * s * (t - t_center);
      jac(r, 3) = -x(0) * env * s;
    }
    return 0;
  }
};

}  // namespace

WavelengthFit fit_wavelength(const std::vector<CurvePoint>& samples) {
  const std::size_t n = samples.size();
  if (n < 10) throw Error(ErrorKind::InvalidArgument, "wavelength fit needs at least 10 samples");

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -t_min;
  double t_sum = 0.0;
  double y_mean = 0.0;
  for (const CurvePoint& p : samples) {
    if (!std::isfinite(p.t_fs) || !std::isfinite(p.value))
      throw Error(ErrorKind::InvalidArgument, "non-finite sample");
    t_min = std::min(t_min, p.t_fs);
    t_max = std::max(t_max, p.t_fs);
    t_sum += p.t_fs;
    y_mean += p.value;
  }
  y_mean /= static_cast<double>(n);
  const double span = t_max - t_min;
  if (!(span > 0.0)) throw Error(ErrorKind::InvalidArgument, "samples must span a time interval");
  const double t_center = t_sum / static_cast<double>(n);
  const double t_scale = std::max(std::abs(t_min), std::abs(t_max));

  // Coarse scan of the angular frequency with a linear fit of the quadratures.
  // Covers 300 nm to 3000 nm.
  const double w_lo = kTwoPi * kSpeedOfLightNmPerFs / 3000.0;
  const double w_hi = kTwoPi * kSpeedOfLightNmPerFs / 300.0;
  const double w_step = 0.1 / span;
  double best_rss = std::numeric_limits<double>::infinity();
  Eigen::Vector4d x0;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = samples[i].value;
  for (double w = w_lo; w <= w_hi; w += w_step) {
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = w * (samples[i].t_fs - t_center);
      design(static_cast<Eigen::Index>(i), 0) = std::cos(arg);
      design(static_cast<Eigen::Index>(i), 1) = std::sin(arg);
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y);
    const double rss = (design * coef - y).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      // A cos + B sin = V cos(arg + psi) with V = |(A, B)|, psi = atan2(-B, A).
      x0 << std::hypot(coef(0), coef(1)), 0.0, w, std::atan2(-coef(1), coef(0));
    }
  }

  SinusoidResiduals functor(samples, t_center, t_scale);
  Eigen::LevenbergMarquardt<SinusoidResiduals> lm(functor);
  lm.setFtol(1e-14);
  lm.setXtol(1e-14);
  lm.setMaxfev(2000);
  Eigen::VectorXd x = x0;
  const Eigen::LevenbergMarquardtSpace::Status status = lm.minimize(x);

  const bool lm_ok = status == Eigen::LevenbergMarquardtSpace::RelativeReductionTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::RelativeErrorTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::RelativeErrorAndReductionTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::CosinusTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::FtolTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::XtolTooSmall ||
                     status == Eigen::LevenbergMarquardtSpace::GtolTooSmall;
  if (!lm_ok || !x.allFinite())
    throw Error(ErrorKind::FitDiverged, "Levenberg-Marquardt did not converge (status " +
                                            std::to_string(static_cast<int>(status)) + ")");

  Eigen::VectorXd residuals(static_cast<Eigen::Index>(n));
  functor(x, residuals);
  const double rss = residuals.squaredNorm();
  double tss = 0.0;
  for (const CurvePoint& p : samples) tss += (p.value - y_mean) * (p.value - y_mean);
  if (!(rss <= 0.5 * tss))
    throw Error(ErrorKind::FitDiverged, "fit leaves more than half of the variance unexplained");

  double w = x(2);
  double visibility = x(0);
  double psi = x(3);
  if (w < 0.0) {
    w = -w;
    psi = -psi;
  }
  if (visibility < 0.0) {
    visibility = -visibility;
    psi += std::numbers::pi;
  }
  const double wavelength = kTwoPi * kSpeedOfLightNmPerFs / w;
  if (span * kSpeedOfLightNmPerFs / wavelength < 2.0)
    throw Error(ErrorKind::FitDiverged, "samples cover fewer than two fitted periods");

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 4);
  functor.df(x, jac);
  const double dof = static_cast<double>(n) - 4.0;
  const double s2 = rss / std::max(1.0, dof);
  const Eigen::Matrix4d cov = s2 * (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
  const double sigma_w = std::sqrt(std::max(0.0, cov(2, 2)));

  WavelengthFit fit;
  fit.wavelength_nm = wavelength;
  fit.uncertainty_nm = wavelength * sigma_w / w;
  fit.visibility = visibility;
  fit.envelope_rate = x(1) / (t_scale * t_scale);
  fit.phase = std::remainder(psi - w * t_center, kTwoPi);
  fit.rms_residual = std::sqrt(rss / static_cast<double>(n));
  fit.iterations = static_cast<int>(lm.iterations());
  return fit;
}

}  // namespace polchan
