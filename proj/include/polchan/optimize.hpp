#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace polchan::optim {

using Vector = Eigen::VectorXd;

/// Objective returning f(x) and writing the gradient into `grad`.
using GradientObjective = std::function<double(const Vector& x, Vector& grad)>;
using Objective = std::function<double(const Vector& x)>;

struct BfgsOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 5000;
  /// Stop when an accepted step changes f by less than this fraction of |f|
  /// over `stall_window` consecutive iterations.
  double stall_tolerance = 1e-15;
  int stall_window = 20;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Objective value after every accepted step; non-increasing.
  std::vector<double> history;
};

/// Quasi-Newton minimization with a backtracking Armijo line search. Every
/// accepted step strictly decreases f.
BfgsResult minimize_bfgs(const GradientObjective& f, Vector x0, const BfgsOptions& options = {});

/// Levenberg-damped Newton iterations from `start`, with the Hessian taken by
/// central differences of the gradient. Continues the history of `start`;
/// only steps that decrease f are accepted.
BfgsResult refine_newton(const GradientObjective& f, BfgsResult start, double gradient_tolerance,
                         int max_iterations = 50);

struct NelderMeadOptions {
  double initial_step = 0.1;
  double x_tolerance = 1e-10;
  double f_tolerance = 1e-14;
  int max_evaluations = 20000;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

NelderMeadResult minimize_nelder_mead(const Objective& f, Vector x0,
                                      const NelderMeadOptions& options = {});

}  // namespace polchan::optim
