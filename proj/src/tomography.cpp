#include "polchan/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>

#include "polchan/error.hpp"
#include "polchan/optimize.hpp"
#include "polchan/parallel.hpp"

namespace polchan {

std::string_view to_string(CountMode mode) {
  return mode == CountMode::singles ? "singles" : "coincidence";
}

std::optional<CountMode> parse_count_mode(std::string_view text) {
  if (text == "singles") return CountMode::singles;
  if (text == "coincidence") return CountMode::coincidence;
  return std::nullopt;
}

void AcquisitionConfig::validate() const {
  if (!(singles_rate_hz >= 0.0) || !(coincidence_rate_hz >= 0.0) || !(background_rate_hz >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "count rates must be non-negative");
  if (!(integration_s >= 0.0) || !std::isfinite(integration_s))
    throw Error(ErrorKind::InvalidArgument, "integration time must be non-negative");
}

namespace {

double mode_rate(const AcquisitionConfig& config) {
  return config.mode == CountMode::singles ? config.singles_rate_hz : config.coincidence_rate_hz;
}

double background_share(const AcquisitionConfig& config) {
  return config.mode == CountMode::singles ? config.background_rate_hz * config.integration_s / 6.0
                                           : 0.0;
}

template <typename Visit>
void for_each_setting(const ProcessMatrix& chi, const AcquisitionConfig& config, Visit&& visit) {
  config.validate();
  chi.validate(1e-9, 1e-9);
  for (BasisLabel input : kTomographyInputs) {
    const DensityMatrix out = apply_channel(chi, basis_state(input));
    for (BasisLabel proj : kAllLabels) {
      const double prob =
          std::max(0.0, (basis_state(proj).matrix() * out.matrix()).trace().real());
      const double mean = mode_rate(config) * config.integration_s * prob + background_share(config);
      visit(input, proj, mean);
    }
  }
}

}  // namespace

std::vector<CountRecord> simulate_counts(const ProcessMatrix& chi, const AcquisitionConfig& config) {
  std::mt19937_64 rng(config.seed);
  std::vector<CountRecord> out;
  for_each_setting(chi, config, [&](BasisLabel input, BasisLabel proj, double mean) {
    std::int64_t n = 0;
    if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> dist(mean);
      n = dist(rng);
    }
    out.push_back({input, proj, n, config.integration_s, config.mode});
  });
  return out;
}

std::vector<CountRecord> expected_counts(const ProcessMatrix& chi, const AcquisitionConfig& config) {
  std::vector<CountRecord> out;
  for_each_setting(chi, config, [&](BasisLabel input, BasisLabel proj, double mean) {
    out.push_back({input, proj, std::llround(mean), config.integration_s, config.mode});
  });
  return out;
}

std::vector<CountRecord> subtract_background(const std::vector<CountRecord>& records,
                                             double background_rate_hz) {
  std::vector<CountRecord> out = records;
  for (CountRecord& r : out) {
    if (r.mode != CountMode::singles) continue;
    const double share = background_rate_hz * r.integration_s / 6.0;
    r.counts = std::max<std::int64_t>(0, std::llround(static_cast<double>(r.counts) - share));
  }
  return out;
}

std::vector<CountRecord> records_for_input(const std::vector<CountRecord>& records, BasisLabel input) {
  std::vector<CountRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const CountRecord& r) { return r.input == input; });
  return out;
}

namespace {

// Poisson likelihood with one free intensity per input group, maximized
// analytically over the intensities. Each datum contributes
// p_k = tr(B_k X) with X = T^dagger T / tr(T^dagger T), T lower triangular.
template <int N>
class ProfileLikelihood {
 public:
  using MatN = Eigen::Matrix<cd, N, N>;
  using Penalty = std::function<double(const MatN& x, MatN& grad)>;

  struct Datum {
    MatN b;
    double counts;
    double time;
    int group;
  };

  ProfileLikelihood(std::vector<Datum> data, int groups, Penalty penalty)
      : data_(std::move(data)), group_counts_(static_cast<std::size_t>(groups), 0.0),
        penalty_(std::move(penalty)) {
    for (const Datum& d : data_) group_counts_[static_cast<std::size_t>(d.group)] += d.counts;
    for (double g : group_counts_) total_ += g;
    if (!(total_ > 0.0)) throw Error(ErrorKind::InsufficientData, "no counts recorded");
  }

  static MatN unpack(const optim::Vector& x) {
    MatN t = MatN::Zero();
    int k = N;
    for (int a = 0; a < N; ++a) t(a, a) = x(a);
    for (int a = 1; a < N; ++a)
      for (int b = 0; b < a; ++b) {
        t(a, b) = cd(x(k), x(k + 1));
        k += 2;
      }
    return t;
  }

  static optim::Vector pack(const MatN& t) {
    optim::Vector x(N * N);
    int k = N;
    for (int a = 0; a < N; ++a) x(a) = t(a, a).real();
    for (int a = 1; a < N; ++a)
      for (int b = 0; b < a; ++b) {
        x(k) = t(a, b).real();
        x(k + 1) = t(a, b).imag();
        k += 2;
      }
    return x;
  }

  /// T with T^dagger T = x.
  static MatN factor(const MatN& x) {
    // Reverse-order Cholesky gives an upper factor U with x = U U^dagger.
    MatN rev;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) rev(i, j) = x(N - 1 - i, N - 1 - j);
    const MatN l = Eigen::LLT<MatN>(rev).matrixL();
    MatN u;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) u(i, j) = l(N - 1 - i, N - 1 - j);
    return u.adjoint();
  }

  static MatN estimate(const optim::Vector& x) {
    const MatN t = unpack(x);
    const MatN m = t.adjoint() * t;
    const MatN est = m / m.trace().real();
    return 0.5 * (est + est.adjoint());
  }

  double operator()(const optim::Vector& x, optim::Vector& grad) const {
    const MatN t = unpack(x);
    const MatN m = t.adjoint() * t;
    const double s = m.trace().real();
    if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
    const MatN est = m / s;

    std::vector<double> probs(data_.size());
    std::vector<double> group_sum(group_counts_.size(), 0.0);
    for (std::size_t k = 0; k < data_.size(); ++k) {
      probs[k] = (data_[k].b * est).trace().real();
      group_sum[static_cast<std::size_t>(data_[k].group)] += data_[k].time * probs[k];
    }

    // Poisson deviance at the profiled intensities: sum n log(n / mu) - n + mu,
    // written through log1p so that the terms stay accurate near a perfect fit.
    double value = 0.0;
    MatN g = MatN::Zero();
    for (std::size_t k = 0; k < data_.size(); ++k) {
      const Datum& d = data_[k];
      const auto grp = static_cast<std::size_t>(d.group);
      if (!(group_counts_[grp] > 0.0)) continue;
      const double mu = group_counts_[grp] * d.time * probs[k] / group_sum[grp];
      double coeff = group_counts_[grp] * d.time / group_sum[grp];
      if (d.counts > 0.0) {
        if (!(probs[k] > 0.0)) return std::numeric_limits<double>::infinity();
        const double r = (d.counts - mu) / mu;
        value += mu * ((1.0 + r) * std::log1p(r) - r);
        coeff -= d.counts / probs[k];
      } else {
        value += mu;
      }
      g += coeff * d.b;
    }
    value /= total_;
    g /= total_;

    if (penalty_) {
      MatN pg = MatN::Zero();
      value += penalty_(est, pg);
      g += pg;
    }

    g = 0.5 * (g + g.adjoint()).eval();
    const MatN gp = g - (g * est).trace().real() * MatN::Identity();
    const MatN w = (2.0 / s) * (gp * t.adjoint());
    grad.resize(N * N);
    int k = N;
    for (int a = 0; a < N; ++a) grad(a) = w(a, a).real();
    for (int a = 1; a < N; ++a)
      for (int b = 0; b < a; ++b) {
        // d/d Re T_ab = Re W_ba, d/d Im T_ab = -Im W_ba
        grad(k) = w(b, a).real();
        grad(k + 1) = -w(b, a).imag();
        k += 2;
      }
    return value;
  }

 private:
  std::vector<Datum> data_;
  std::vector<double> group_counts_;
  Penalty penalty_;
  double total_ = 0.0;
};

std::string scientific(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

template <int N>
std::pair<typename ProfileLikelihood<N>::MatN, MleDiagnostics> maximize_likelihood(
    const ProfileLikelihood<N>& objective, const MleOptions& options) {
  using Model = ProfileLikelihood<N>;
  optim::BfgsOptions bfgs;
  bfgs.gradient_tolerance = std::min(options.target_gradient, options.gradient_tolerance);
  bfgs.max_iterations = options.max_iterations;
  auto fn = [&](const optim::Vector& x, optim::Vector& g) { return objective(x, g); };

  const optim::Vector start = Model::pack(Model::MatN::Identity() / std::sqrt(double(N)));
  auto solve = [&](const optim::Vector& x0) {
    // A small gradient does not mean the flat trace-preservation directions
    // have settled, so the Newton stage runs until it stops making progress.
    optim::BfgsResult coarse = optim::minimize_bfgs(fn, x0, bfgs);
    optim::BfgsResult fine = optim::refine_newton(fn, coarse, 0.0, 20);
    if (fine.gradient_norm <= bfgs.gradient_tolerance) return fine;
    optim::BfgsResult again = optim::minimize_bfgs(fn, fine.x, bfgs);
    fine.history.insert(fine.history.end(), again.history.begin() + 1, again.history.end());
    again.history = std::move(fine.history);
    again.iterations += fine.iterations;
    again.evaluations += fine.evaluations;
    return again.gradient_norm <= options.gradient_tolerance ? again : coarse;
  };
  optim::BfgsResult res = solve(start);
  MleDiagnostics diag;
  if (!(res.gradient_norm <= options.gradient_tolerance)) {
    std::mt19937_64 rng(options.restart_seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    optim::Vector perturbed = res.x;
    const double scale = 0.05 * res.x.norm() / std::sqrt(double(res.x.size()));
    for (Eigen::Index i = 0; i < perturbed.size(); ++i) perturbed(i) += scale * noise(rng);
    optim::BfgsResult second = solve(perturbed);
    diag.restarts = 1;
    if (second.gradient_norm <= options.gradient_tolerance || second.value < res.value)
      res = std::move(second);
  }
  if (!(res.gradient_norm <= options.gradient_tolerance))
    throw Error(ErrorKind::NonConvergence,
                "likelihood maximization stalled with gradient norm " +
                    scientific(res.gradient_norm) + " after " +
                    std::to_string(res.iterations) + " iterations");
  diag.iterations = res.iterations;
  diag.evaluations = res.evaluations;
  diag.objective = res.value;
  diag.gradient_norm = res.gradient_norm;
  diag.history = std::move(res.history);
  return {Model::estimate(res.x), std::move(diag)};
}

}  // namespace

namespace {

ProfileLikelihood<2> qst_model(const std::vector<CountRecord>& records) {
  using Model = ProfileLikelihood<2>;
  std::vector<Model::Datum> data;
  std::map<BasisLabel, int> seen;
  for (const CountRecord& r : records) {
    if (r.counts < 0) throw Error(ErrorKind::InvalidArgument, "negative count");
    if (!(r.integration_s > 0.0))
      throw Error(ErrorKind::InsufficientData, "record with zero integration time");
    ++seen[r.projector];
    data.push_back({basis_state(r.projector).matrix(), static_cast<double>(r.counts),
                    r.integration_s, 0});
  }
  for (BasisLabel proj : kAllLabels)
    if (seen[proj] == 0)
      throw Error(ErrorKind::InsufficientData,
                  "missing projector " + std::string(to_string(proj)) + " record");
  return Model(std::move(data), 1, {});
}

}  // namespace

QstResult qst(const std::vector<CountRecord>& records, const MleOptions& options) {
  auto [rho, diag] = maximize_likelihood<2>(qst_model(records), options);
  return {DensityMatrix(rho), std::move(diag)};
}

namespace {

using Mat4cRef = Eigen::Matrix<cd, 4, 4>;

// B with p = tr(chi B) = tr(proj E(rho)).
Mat4c process_functional(const Mat2c& proj, const Mat2c& rho) {
  Mat4c b;
  for (int n = 0; n < 4; ++n)
    for (int m = 0; m < 4; ++m)
      b(n, m) = (proj * sigma(m) * rho * sigma(n).adjoint()).trace();
  return b;
}

// Right-multiplies every Kraus operator by (sum K^dagger K)^(-1/2).
ProcessMatrix enforce_trace_preservation(const ProcessMatrix& chi) {
  Eigen::SelfAdjointEigenSolver<Mat4c> eig(chi.matrix());
  KrausSet kraus;
  for (int k = 0; k < 4; ++k) {
    const double w = eig.eigenvalues()(k);
    if (w <= 0.0) continue;
    Mat2c op = Mat2c::Zero();
    for (int m = 0; m < 4; ++m) op += std::sqrt(w) * eig.eigenvectors()(m, k) * sigma(m);
    kraus.operators.push_back(op);
  }
  Mat2c a = Mat2c::Zero();
  for (const Mat2c& op : kraus.operators) a += op.adjoint() * op;
  Eigen::SelfAdjointEigenSolver<Mat2c> ae(0.5 * (a + a.adjoint()));
  if (!(ae.eigenvalues().minCoeff() > 0.0))
    throw Error(ErrorKind::NonConvergence, "reconstructed process annihilates a state");
  const Mat2c inv_sqrt = ae.eigenvectors() * ae.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                         ae.eigenvectors().adjoint();
  for (Mat2c& op : kraus.operators) op = op * inv_sqrt;
  return chi_from_kraus(kraus);
}

ProfileLikelihood<4> qpt_model(const std::vector<CountRecord>& records, const MleOptions& options) {
  using Model = ProfileLikelihood<4>;
  std::vector<Model::Datum> data;
  std::map<std::pair<BasisLabel, BasisLabel>, int> seen;
  for (const CountRecord& r : records) {
    if (r.counts < 0) throw Error(ErrorKind::InvalidArgument, "negative count");
    if (!(r.integration_s > 0.0))
      throw Error(ErrorKind::InsufficientData, "record with zero integration time");
    const auto* it = std::find(kTomographyInputs.begin(), kTomographyInputs.end(), r.input);
    if (it == kTomographyInputs.end())
      throw Error(ErrorKind::InvalidArgument,
                  "input state " + std::string(to_string(r.input)) + " is not a tomography input");
    ++seen[{r.input, r.projector}];
    data.push_back({process_functional(basis_state(r.projector).matrix(), basis_state(r.input).matrix()),
                    static_cast<double>(r.counts), r.integration_s,
                    static_cast<int>(it - kTomographyInputs.begin())});
  }
  for (BasisLabel input : kTomographyInputs)
    for (BasisLabel proj : kAllLabels)
      if (seen[{input, proj}] == 0)
        throw Error(ErrorKind::InsufficientData, "missing record for input " +
                                                     std::string(to_string(input)) + ", projector " +
                                                     std::string(to_string(proj)));

  // Q(chi) = sum chi_mn sigma_n sigma_m - I; penalty w ||Q||_F^2 added to the
  // raw negative log-likelihood, hence divided by the total count here.
  double total = 0.0;
  for (const Model::Datum& d : data) total += d.counts;
  const double weight = total > 0.0 ? options.penalty_weight / total : 0.0;
  Model::Penalty penalty = [weight](const Mat4c& chi, Mat4c& grad) {
    Mat2c q = -Mat2c::Identity();
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) q += chi(m, n) * sigma(n).adjoint() * sigma(m);
    Mat4c h;
    for (int n = 0; n < 4; ++n)
      for (int m = 0; m < 4; ++m) h(n, m) = (q.adjoint() * sigma(n).adjoint() * sigma(m)).trace();
    grad = weight * (h + h.adjoint());
    return weight * q.squaredNorm();
  };
  if (!(weight > 0.0)) penalty = {};

  return Model(std::move(data), 4, penalty);
}

}  // namespace

QptResult qpt(const std::vector<CountRecord>& records, const MleOptions& options) {
  auto [chi, diag] = maximize_likelihood<4>(qpt_model(records, options), options);
  const ProcessMatrix penalized(chi);
  QptResult out{enforce_trace_preservation(penalized), 0.0, std::move(diag)};
  out.trace_preservation_deviation = trace_preservation_deviation(penalized);
  return out;
}

TomographyResult monte_carlo_errors(const std::vector<CountRecord>& records, int n_samples,
                                    std::uint64_t seed, const std::optional<ProcessMatrix>& model,
                                    const MleOptions& options, double background_rate_hz) {
  if (n_samples < 2)
    throw Error(ErrorKind::InvalidArgument, "Monte Carlo error estimation needs at least 2 samples");

  auto prepare = [background_rate_hz](std::vector<CountRecord> rs) {
    return background_rate_hz > 0.0 ? subtract_background(rs, background_rate_hz) : rs;
  };
  const QptResult central = qpt(prepare(records), options);
  TomographyResult result;
  result.chi_hat = central.chi;
  result.eigenvalues = central.chi.eigenvalues();
  result.mc_samples = n_samples;
  result.seed = seed;
  result.penalty_weight = options.penalty_weight;
  result.diagnostics = central.diagnostics;
  result.trace_preservation_deviation = central.trace_preservation_deviation;
  if (model) result.fidelity_to_model = process_fidelity(central.chi, *model);

  std::vector<Vec4> eigs(static_cast<std::size_t>(n_samples));
  std::vector<double> fids(static_cast<std::size_t>(n_samples), 0.0);
  parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t s) {
    std::mt19937_64 rng(derive_seed(seed, s));
    std::vector<CountRecord> resampled = records;
    for (CountRecord& r : resampled) {
      if (r.counts <= 0) continue;
      std::poisson_distribution<std::int64_t> dist(static_cast<double>(r.counts));
      r.counts = dist(rng);
    }
    MleOptions sample_options = options;
    sample_options.restart_seed = derive_seed(options.restart_seed, s);
    const QptResult fit = qpt(prepare(std::move(resampled)), sample_options);
    eigs[s] = fit.chi.eigenvalues();
    if (model) fids[s] = process_fidelity(fit.chi, *model);
  });

  auto stddev = [n_samples](auto&& value_of) {
    double mean = 0.0;
    for (int s = 0; s < n_samples; ++s) mean += value_of(s);
    mean /= n_samples;
    double var = 0.0;
    for (int s = 0; s < n_samples; ++s) var += (value_of(s) - mean) * (value_of(s) - mean);
    return std::sqrt(var / (n_samples - 1));
  };
  for (int i = 0; i < 4; ++i)
    result.eigenvalue_errors(i) =
        stddev([&](int s) { return eigs[static_cast<std::size_t>(s)](i); });
  if (model) result.fidelity_error = stddev([&](int s) { return fids[static_cast<std::size_t>(s)]; });
  return result;
}

std::vector<EigenvalueCurveRow> eigenvalue_curve(const std::vector<LabelledChannel>& family,
                                                 const AcquisitionConfig& config,
                                                 const EigenvalueCurveOptions& options) {
  if (family.empty()) throw Error(ErrorKind::InvalidArgument, "empty channel family");
  constexpr std::array<CountMode, 2> modes = {CountMode::singles, CountMode::coincidence};
  std::vector<EigenvalueCurveRow> rows(family.size() * modes.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const std::size_t slot = i * modes.size() + j;
      AcquisitionConfig cfg = config;
      cfg.mode = modes[j];
      cfg.seed = derive_seed(config.seed, slot);
      std::vector<CountRecord> records = options.noiseless ? expected_counts(family[i].chi, cfg)
                                                           : simulate_counts(family[i].chi, cfg);
      const double background = cfg.mode == CountMode::singles ? cfg.background_rate_hz : 0.0;
      const TomographyResult tomo =
          monte_carlo_errors(records, options.mc_samples, derive_seed(cfg.seed, 1), family[i].chi,
                             options.mle, background);
      EigenvalueCurveRow& row = rows[slot];
      row.label = family[i].label;
      row.mode = cfg.mode;
      row.eigenvalues = tomo.eigenvalues;
      row.errors = tomo.eigenvalue_errors;
      row.fidelity = tomo.fidelity_to_model.value_or(0.0);
      row.fidelity_error = tomo.fidelity_error.value_or(0.0);
    }
  }
  return rows;
}

namespace detail {

double qst_objective(const std::vector<CountRecord>& records, const Eigen::VectorXd& params,
                     Eigen::VectorXd& grad) {
  return qst_model(records)(params, grad);
}

double qpt_objective(const std::vector<CountRecord>& records, const Eigen::VectorXd& params,
                     Eigen::VectorXd& grad, const MleOptions& options) {
  return qpt_model(records, options)(params, grad);
}

Mat4c qpt_estimate(const Eigen::VectorXd& params) { return ProfileLikelihood<4>::estimate(params); }

}  // namespace detail

}  // namespace polchan
