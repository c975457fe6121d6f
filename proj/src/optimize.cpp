#include "polchan/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace polchan::optim {

BfgsResult minimize_bfgs(const GradientObjective& f, Vector x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult result;
  Vector grad(n);
  double value = f(x0, grad);
  result.evaluations = 1;
  result.history.push_back(value);

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  Vector x = std::move(x0);
  int stalled = 0;
  bool fresh_hessian = true;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter;
    if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    Vector direction = -inv_hessian * grad;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      fresh_hessian = true;
      direction = -grad;
      slope = -grad.squaredNorm();
    }

    // Scale the very first step so that it moves by at most ~1 in any coordinate.
    double step = 1.0;
    if (fresh_hessian) step = std::min(1.0, 1.0 / std::max(1e-300, direction.lpNorm<Eigen::Infinity>()));

    Vector trial_grad(n);
    Vector trial;
    double trial_value = std::numeric_limits<double>::infinity();
    bool accepted = false;
    constexpr double c1 = 1e-4;
    for (int ls = 0; ls < 60; ++ls) {
      trial = x + step * direction;
      trial_value = f(trial, trial_grad);
      ++result.evaluations;
      if (std::isfinite(trial_value) && trial_value <= value + c1 * step * slope &&
          trial_value <= value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (!accepted) {
      if (fresh_hessian) break;  // steepest descent cannot make progress either
      inv_hessian.setIdentity();
      fresh_hessian = true;
      continue;
    }

    const Vector s = trial - x;
    const Vector y = trial_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-300 * s.squaredNorm() && sy > 0.0) {
      if (fresh_hessian) {
        inv_hessian *= sy / y.squaredNorm();
        fresh_hessian = false;
      }
      const double rho = 1.0 / sy;
      const Vector hy = inv_hessian * y;
      inv_hessian += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }

    const double change = value - trial_value;
    x = trial;
    grad = trial_grad;
    value = trial_value;
    result.history.push_back(value);

    if (change <= options.stall_tolerance * std::abs(value)) {
      if (++stalled >= options.stall_window) break;
    } else {
      stalled = 0;
    }
  }

  result.x = x;
  result.value = value;
  result.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  if (result.gradient_norm <= options.gradient_tolerance) result.converged = true;
  return result;
}

BfgsResult refine_newton(const GradientObjective& f, BfgsResult start, double gradient_tolerance,
                         int max_iterations) {
  BfgsResult result = std::move(start);
  const Eigen::Index n = result.x.size();
  Vector grad(n);
  double value = f(result.x, grad);
  ++result.evaluations;
  double damping = 1e-3;

  for (int iter = 0; iter < max_iterations; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= gradient_tolerance) break;

    Eigen::MatrixXd hessian(n, n);
    const double h = 1e-6 * std::max(1.0, result.x.lpNorm<Eigen::Infinity>());
    Vector gp(n);
    Vector gm(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector xp = result.x;
      Vector xm = result.x;
      xp(i) += h;
      xm(i) -= h;
      f(xp, gp);
      f(xm, gm);
      hessian.col(i) = (gp - gm) / (2.0 * h);
    }
    result.evaluations += static_cast<int>(2 * n);
    hessian = 0.5 * (hessian + hessian.transpose()).eval();
    const double scale = std::max(1e-300, hessian.diagonal().cwiseAbs().maxCoeff());

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = hessian;
      damped.diagonal().array() += damping * scale;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Vector step = ldlt.solve(-grad);
      if (ldlt.info() != Eigen::Success || !step.allFinite() || !(grad.dot(step) < 0.0)) {
        damping *= 10.0;
        continue;
      }
      Vector trial_grad(n);
      const Vector trial = result.x + step;
      const double trial_value = f(trial, trial_grad);
      ++result.evaluations;
      if (std::isfinite(trial_value) && trial_value < value) {
        result.x = trial;
        grad = trial_grad;
        value = trial_value;
        result.history.push_back(value);
        damping = std::max(1e-12, damping * 0.1);
        accepted = true;
      } else {
        damping *= 10.0;
      }
    }
    ++result.iterations;
    if (!accepted) break;
  }

  result.value = value;
  result.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  result.converged = result.gradient_norm <= gradient_tolerance;
  return result;
}

NelderMeadResult minimize_nelder_mead(const Objective& f, Vector x0,
                                      const NelderMeadOptions& options) {
  const Eigen::Index n = x0.size();
  std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)](i) += options.initial_step;

  NelderMeadResult result;
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = f(simplex[i]);
  result.evaluations = static_cast<int>(simplex.size());

  std::vector<std::size_t> order(simplex.size());
  while (result.evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double spread = 0.0;
    for (const Vector& v : simplex) spread = std::max(spread, (v - simplex[best]).lpNorm<Eigen::Infinity>());
    if (spread <= options.x_tolerance &&
        std::abs(values[worst] - values[best]) <= options.f_tolerance) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(n);
    for (std::size_t i : order)
      if (i != worst) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Vector reflected = centroid + (centroid - simplex[worst]);
    const double fr = f(reflected);
    ++result.evaluations;
    if (fr < values[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(expanded);
      ++result.evaluations;
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Vector contracted = outside ? Vector(centroid + 0.5 * (reflected - centroid))
                                      : Vector(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = f(contracted);
    ++result.evaluations;
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = f(simplex[i]);
      ++result.evaluations;
    }
  }

  const auto it = std::min_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::distance(values.begin(), it));
  result.x = simplex[idx];
  result.value = *it;
  return result;
}

}  // namespace polchan::optim
