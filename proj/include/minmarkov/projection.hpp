#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "minmarkov/expfam.hpp"

namespace minmarkov {

// Convex program: minimize psi(theta) - <theta, targets> over the family.
// At the optimum the mean map equals `targets`, i.e. the family member with
// the requested expected statistics and minimal divergence from theta = 0.
struct ProjectionProblem {
  ExpFamily family;
  std::vector<double> targets;

  double grad_tol = 1e-9;        // max-norm gradient stopping rule
  double f_reduction_eps = 1e-12;  // stop when the objective stalls
  int max_iter = 500;
  double eigen_tol = 1e-12;      // tolerance passed to the inner eigensolves
  double theta_bound = 1e4;      // max-norm divergence guard
  bool fisher_init = false;      // seed the inverse Hessian with G(0)^{-1}

  // Optional per-iterate hook (iteration, theta, objective, grad max-norm).
  std::function<void(int, const std::vector<double>&, double, double)>
      on_iterate{};
};

struct ProjectionResult {
  std::vector<double> theta;
  ThetaPoint point;          // solved member at the final theta
  double objective = 0.0;
  double grad_norm = 0.0;    // max-norm of psi'(theta) - targets
  int iterations = 0;
};

// Objective and gradient at theta; the gradient is mean_map(theta) - targets.
double objective_and_gradient(const ProjectionProblem& problem,
                              std::span<const double> theta,
                              std::vector<double>& grad,
                              std::optional<ThetaPoint>* point_out = nullptr);

// BFGS with Armijo backtracking from theta = 0.  When objective decreases
// fall below double-precision resolution while the gradient is still above
// `grad_tol`, the endgame switches to Newton steps typed by the exact Fisher
// matrix and judged on the gradient norm alone, so tight gradient tolerances
// remain reachable on ill-conditioned instances.  Throws ConvergenceError
// when the iteration cap is reached or the polish phase cannot reach the
// tolerance either, and with diverged() set when theta runs away (targets
// outside the attainable moment span).
ProjectionResult project(const ProjectionProblem& problem);

}  // namespace minmarkov
