#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "polchan/channel.hpp"

namespace polchan {

/// Speed of light in nm/fs.
inline constexpr double kSpeedOfLightNmPerFs = 299.792458;

enum class SpectralModel { gaussian };

/// Single-photon wave-packet. The coherence function is
/// gamma(t) = exp(-t^2 / (2 tau^2)) exp(i 2 pi c t / lambda0), so |gamma(tau)| = e^{-1/2}.
struct WavePacket {
  double center_wavelength_nm = 780.0;
  double coherence_time_fs = 180.0;
  SpectralModel spectral_model = SpectralModel::gaussian;

  void validate() const;
};

/// Heralded (coincidence) wave-packet. Coherence time is a placeholder value.
WavePacket quantum_packet();
/// Unheralded (singles) wave-packet; shorter coherence than the heralded one.
/// Coherence time is a placeholder value.
WavePacket classical_packet();

enum class Compensator { perpendicular, omitted, parallel };

std::string_view to_string(Compensator c);

/// Soleil-Babinet dephaser: two translatable wedges plus an optional fixed plate.
struct SbcGeometry {
  double wedge_angle_deg = 15.0;
  double translation_mm = 0.0;
  Compensator compensator = Compensator::perpendicular;
  double delta_n = 0.009;
  double compensator_length_mm = 9.0;
  /// Birefringent path through both wedges at zero translation. Calibration
  /// constant: the wedge geometry itself is not specified.
  double wedge_base_path_mm = 9.0;
  /// Delay added by the full mechanical travel of the wedges.
  double wedge_span_fs = 380.0;

  double max_translation_mm() const;
  void validate() const;
};

/// Signed delay t = L delta_n / c in fs, with L the wedge path plus (parallel),
/// minus (perpendicular) or without (omitted) the fixed plate. OutOfRange if
/// the translation leaves [0, max_translation_mm()].
double sbc_delay(const SbcGeometry& geometry);

/// Complex degree of coherence between the two polarization modes after delay t.
cd coherence(double t_fs, const WavePacket& packet);

/// Equivalent dephasing probability (1 - |gamma(t)|) / 2.
double sbc_dephasing_probability(double t_fs, const WavePacket& packet);

/// Channel keeping h/v populations and multiplying the h-v coherence by gamma(t).
ProcessMatrix sbc_channel(double t_fs, const WavePacket& packet);

struct CurvePoint {
  double t_fs = 0.0;
  double value = 0.0;
};

/// S2 of the output state for each delay.
std::vector<CurvePoint> s2_curve(const std::vector<double>& t_samples_fs, const WavePacket& packet,
                                 const DensityMatrix& input);

/// Samples of the S2 oscillation for a |p> input plus additive gaussian noise.
std::vector<CurvePoint> synthetic_s2_samples(const WavePacket& packet, double t_start_fs,
                                             double t_stop_fs, int count, double noise_sigma,
                                             std::uint64_t seed);

struct WavelengthFit {
  double wavelength_nm = 0.0;
  double uncertainty_nm = 0.0;  // one standard error
  double visibility = 0.0;
  double envelope_rate = 0.0;  // a in exp(-a t^2), 1/fs^2
  double phase = 0.0;          // phi0 in cos(2 pi c t / lambda + phi0)
  double rms_residual = 0.0;
  int iterations = 0;
};

/// Nonlinear least-squares fit of V exp(-a t^2) cos(2 pi c t / lambda + phi0).
/// InvalidArgument for fewer than 10 samples; FitDiverged if the optimizer
/// fails, the fit explains less than half the variance, or the samples span
/// fewer than two fitted periods.
WavelengthFit fit_wavelength(const std::vector<CurvePoint>& samples);

}  // namespace polchan
