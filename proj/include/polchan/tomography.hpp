#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polchan/channel.hpp"
#include "polchan/polarization.hpp"

namespace polchan {

enum class CountMode { singles, coincidence };

std::string_view to_string(CountMode mode);
std::optional<CountMode> parse_count_mode(std::string_view text);

struct CountRecord {
  BasisLabel input = BasisLabel::h;
  BasisLabel projector = BasisLabel::h;
  std::int64_t counts = 0;
  double integration_s = 1.0;
  CountMode mode = CountMode::coincidence;
};

struct AcquisitionConfig {
  double singles_rate_hz = 20000.0;
  double coincidence_rate_hz = 1000.0;
  /// Stray-light rate, singles only, split evenly over the six projectors.
  double background_rate_hz = 2000.0;
  double integration_s = 10.0;
  CountMode mode = CountMode::coincidence;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Process-tomography inputs.
inline constexpr std::array<BasisLabel, 4> kTomographyInputs = {BasisLabel::h, BasisLabel::v,
                                                                BasisLabel::p, BasisLabel::r};

/// One Poisson-distributed record per (input, projector) pair, 24 in total.
std::vector<CountRecord> simulate_counts(const ProcessMatrix& chi, const AcquisitionConfig& config);

/// Noise-free counts for the same 24 settings (expected values rounded to the
/// nearest integer).
std::vector<CountRecord> expected_counts(const ProcessMatrix& chi, const AcquisitionConfig& config);

/// Removes background_rate * integration / 6 from singles records, clamped at 0.
std::vector<CountRecord> subtract_background(const std::vector<CountRecord>& records,
                                             double background_rate_hz);

struct MleOptions {
  /// Weight of the trace-preservation penalty ||sum chi_mn sigma_n sigma_m - I||^2,
  /// added to the raw negative log-likelihood.
  double penalty_weight = 1e6;
  /// Applied to the likelihood divided by the total number of counts. A fit
  /// that stops with a larger gradient norm raises NonConvergence.
  double gradient_tolerance = 1e-8;
  /// The optimizer keeps iterating until the gradient norm reaches this value
  /// or progress stalls.
  double target_gradient = 1e-10;
  int max_iterations = 5000;
  /// Seed of the perturbed restart used after a non-converged first attempt.
  std::uint64_t restart_seed = 0;
};

struct MleDiagnostics {
  int iterations = 0;
  int evaluations = 0;
  int restarts = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  /// Objective after each accepted optimizer step (first attempt that converged).
  std::vector<double> history;
};

struct QstResult {
  DensityMatrix rho;
  MleDiagnostics diagnostics;
};

struct QptResult {
  ProcessMatrix chi;
  /// ||sum chi_mn sigma_n sigma_m - I|| of the penalized optimum, before the
  /// final renormalization that makes `chi` exactly trace preserving.
  double trace_preservation_deviation = 0.0;
  MleDiagnostics diagnostics;
};

/// Maximum-likelihood state from the six projector records of one input.
QstResult qst(const std::vector<CountRecord>& records, const MleOptions& options = {});

/// Maximum-likelihood process matrix from the records of all four inputs. The
/// penalized optimum is renormalized (K -> K (sum K^dagger K)^(-1/2)) so the
/// result is exactly trace preserving.
QptResult qpt(const std::vector<CountRecord>& records, const MleOptions& options = {});

struct TomographyResult {
  ProcessMatrix chi_hat;
  Vec4 eigenvalues = Vec4::Zero();
  Vec4 eigenvalue_errors = Vec4::Zero();
  std::optional<double> fidelity_to_model;
  std::optional<double> fidelity_error;
  int mc_samples = 0;
  std::uint64_t seed = 0;
  double penalty_weight = 0.0;
  MleDiagnostics diagnostics;
  double trace_preservation_deviation = 0.0;
};

/// Reconstructs chi from `records`, then repeats the reconstruction on
/// `n_samples` Poisson resamplings of the observed counts to obtain standard
/// deviations. With a nonzero background rate the records are raw counts:
/// singles are resampled first and background-subtracted before every fit.
/// InvalidArgument if n_samples < 2.
TomographyResult monte_carlo_errors(const std::vector<CountRecord>& records, int n_samples,
                                    std::uint64_t seed,
                                    const std::optional<ProcessMatrix>& model = std::nullopt,
                                    const MleOptions& options = {},
                                    double background_rate_hz = 0.0);

struct LabelledChannel {
  std::string label;
  ProcessMatrix chi;
};

struct EigenvalueCurveRow {
  std::string label;
  CountMode mode = CountMode::coincidence;
  Vec4 eigenvalues = Vec4::Zero();
  Vec4 errors = Vec4::Zero();
  double fidelity = 0.0;
  double fidelity_error = 0.0;
};

struct EigenvalueCurveOptions {
  int mc_samples = 20;
  /// Simulate from expected counts instead of Poisson draws.
  bool noiseless = false;
  MleOptions mle;
};

/// Simulated acquisition and reconstruction of every channel, in both singles
/// and coincidence mode. Rows are ordered by family member, then mode.
std::vector<EigenvalueCurveRow> eigenvalue_curve(const std::vector<LabelledChannel>& family,
                                                 const AcquisitionConfig& config,
                                                 const EigenvalueCurveOptions& options = {});

/// Records belonging to one input state.
std::vector<CountRecord> records_for_input(const std::vector<CountRecord>& records, BasisLabel input);

namespace detail {

/// Objectives minimized by qst and qpt: the negative log-likelihood per count,
/// offset so that a perfect fit scores 0 (plus the penalty for qpt), as a
/// function of the lower-triangular factor T. Parameters are the N diagonal
/// entries of T followed by (re, im) of each entry below the diagonal, row by row.
double qst_objective(const std::vector<CountRecord>& records, const Eigen::VectorXd& params,
                     Eigen::VectorXd& grad);
double qpt_objective(const std::vector<CountRecord>& records, const Eigen::VectorXd& params,
                     Eigen::VectorXd& grad, const MleOptions& options = {});
/// T^dagger T / tr(T^dagger T) for a 4x4 factor.
Mat4c qpt_estimate(const Eigen::VectorXd& params);

}  // namespace detail

}  // namespace polchan
