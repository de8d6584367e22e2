#include "minmarkov/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "minmarkov/errors.hpp"

namespace minmarkov {

namespace {

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<int> runaway_components(const std::vector<double>& theta,
                                    double bound) {
  std::vector<int> out;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (std::abs(theta[i]) > bound) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

double objective_and_gradient(const ProjectionProblem& problem,
                              std::span<const double> theta,
                              std::vector<double>& grad,
                              std::optional<ThetaPoint>* point_out) {
  ThetaPoint point = problem.family.at(theta, problem.eigen_tol);
  grad = mean_map(point);
  double dot = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    grad[k] -= problem.targets[k];
    dot += theta[k] * problem.targets[k];
  }
  const double value = point.potential - dot;
  if (point_out) *point_out = std::move(point);
  return value;
}

ProjectionResult project(const ProjectionProblem& problem) {
  const int k = problem.family.dimension();
  if (static_cast<int>(problem.targets.size()) != k) {
    throw InputError("target vector has length " +
                     std::to_string(problem.targets.size()) +
                     ", family dimension is " + std::to_string(k));
  }
  for (double t : problem.targets) {
    if (!std::isfinite(t)) throw InputError("targets must be finite");
  }

  using Vec = Eigen::VectorXd;
  using Mat = Eigen::MatrixXd;

  Vec theta = Vec::Zero(k);
  std::vector<double> grad_std;
  std::optional<ThetaPoint> point;
  std::vector<double> theta_std(theta.data(), theta.data() + k);
  double value = objective_and_gradient(problem, theta_std, grad_std, &point);
  Vec grad = Eigen::Map<const Vec>(grad_std.data(), k);

  Mat hinv = Mat::Identity(k, k);
  if (problem.fisher_init) {
    const auto g0 = fisher_information(*point);
    Mat fisher(k, k);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) fisher(a, b) = g0[a][b];
    }
    Eigen::LDLT<Mat> ldlt(fisher);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      hinv = ldlt.solve(Mat::Identity(k, k));
    }
  }

  constexpr double kArmijoC1 = 1e-4;
  constexpr double kShrink = 0.5;
  // Beyond this max-norm, members of a family with O(1) statistics are
  // numerically degenerate; evaluation failures out there diagnose
  // divergence rather than a defective family.
  constexpr double kDegenerateTheta = 300.0;

  // Converged when the gradient max-norm is small (certifies the moment
  // equations) and the last step no longer reduced the objective.
  double last_reduction = 0.0;
  int stalled_steps = 0;  // consecutive iterations without real progress
  bool converged = false;
  bool stalled_out = false;
  int iter = 0;

  // Near the optimum the attainable objective decrease falls below one ulp
  // of the objective before the gradient reaches a tight tolerance, and a
  // line search judged on objective values cannot make further progress.
  // This endgame is handled by Newton steps on the moment equations: the
  // exact Fisher matrix types the step and acceptance is judged on the
  // gradient norm alone.  Returns true once the gradient tolerance holds.
  auto newton_polish = [&]() -> bool {
    constexpr int kPolishSteps = 8;
    for (int ps = 0; ps < kPolishSteps; ++ps) {
      double gnorm = max_norm(grad_std);
      if (gnorm <= problem.grad_tol) return true;
      const auto info = fisher_information(*point);
      Mat fisher(k, k);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) fisher(a, b) = info[a][b];
      }
      Eigen::LDLT<Mat> ldlt(fisher);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
      const Vec dir = ldlt.solve(-grad);
      double scale = 1.0;
      bool improved = false;
      for (int h = 0; h < 30 && !improved; ++h, scale *= kShrink) {
        const Vec trial = theta + scale * dir;
        std::vector<double> trial_std(trial.data(), trial.data() + k);
        std::vector<double> trial_grad;
        std::optional<ThetaPoint> trial_point;
        double trial_value = 0.0;
        try {
          trial_value = objective_and_gradient(problem, trial_std, trial_grad,
                                               &trial_point);
        } catch (const Error&) {
          continue;
        }
        if (max_norm(trial_grad) < gnorm) {
          theta = trial;
          theta_std = std::move(trial_std);
          grad = Eigen::Map<const Vec>(trial_grad.data(), k);
          grad_std = std::move(trial_grad);
          value = trial_value;
          point = std::move(trial_point);
          improved = true;
        }
      }
      if (!improved) return false;
      if (iter < problem.max_iter) {
        ++iter;
        if (problem.on_iterate) {
          problem.on_iterate(iter, theta_std, value, max_norm(grad_std));
        }
      }
    }
    return max_norm(grad_std) <= problem.grad_tol;
  };

  for (; iter < problem.max_iter; ++iter) {
    const double gnorm = max_norm(grad_std);
    if (problem.on_iterate) {
      problem.on_iterate(iter, theta_std, value, gnorm);
    }
    if (gnorm <= problem.grad_tol &&
        last_reduction <= problem.f_reduction_eps) {
      converged = true;
      break;
    }
    if (stalled_steps >= 2) {
      if (newton_polish()) {
        converged = true;
      } else {
        stalled_out = true;
      }
      break;
    }

    Vec dir = -(hinv * grad);
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {  // restart on a non-descent direction
      hinv = Mat::Identity(k, k);
      dir = -grad;
      slope = grad.dot(dir);
    }

    double step = 1.0;
    Vec trial_theta;
    std::vector<double> trial_grad;
    std::optional<ThetaPoint> trial_point;
    double trial_value = 0.0;
    bool accepted = false;
    std::vector<double> degenerate_theta;
    for (int ls = 0; ls < 60; ++ls) {
      trial_theta = theta + step * dir;
      std::vector<double> trial_std(trial_theta.data(),
                                    trial_theta.data() + k);
      try {
        trial_value = objective_and_gradient(problem, trial_std, trial_grad,
                                             &trial_point);
      } catch (const Error&) {
        // Evaluation failures at extreme theta (exp underflow, stalled
        // eigen solves) are the numerical face of unattainable targets:
        // the dual is unbounded below and theta runs away until members
        // stop being representable.  Treat such a trial like a rejected
        // step; failures at moderate theta are real and propagate.
        if (max_norm(trial_std) <= kDegenerateTheta) throw;
        if (degenerate_theta.empty()) degenerate_theta = trial_std;
        step *= kShrink;
        continue;
      }
      if (std::isfinite(trial_value) &&
          trial_value <= value + kArmijoC1 * step * slope) {
        accepted = true;
        break;
      }
      step *= kShrink;
    }
    if (!accepted) {
      if (!degenerate_theta.empty() ||
          max_norm(theta_std) > kDegenerateTheta) {
        if (degenerate_theta.empty()) degenerate_theta = theta_std;
        throw ConvergenceError(
            "parameters diverged; the target moments appear unattainable "
            "within the family",
            iter, max_norm(grad_std), /*diverged=*/true,
            runaway_components(degenerate_theta, kDegenerateTheta));
      }
      // A fully rejected line search at moderate theta is the same
      // double-precision endgame as a zero-progress one.
      if (newton_polish()) {
        converged = true;
        break;
      }
      throw ConvergenceError(
          "line search failed to find a decreasing step", iter,
          max_norm(grad_std));
    }

    Vec new_grad = Eigen::Map<const Vec>(trial_grad.data(), k);
    const Vec s = trial_theta - theta;
    const Vec y = new_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Mat left = Mat::Identity(k, k) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
    }

    last_reduction = value - trial_value;
    if (last_reduction <= problem.f_reduction_eps &&
        max_norm(trial_grad) > problem.grad_tol) {
      ++stalled_steps;
    } else {
      stalled_steps = 0;
    }
    theta = trial_theta;
    theta_std.assign(theta.data(), theta.data() + k);
    grad = new_grad;
    grad_std = trial_grad;
    value = trial_value;
    point = std::move(trial_point);

    if (max_norm(theta_std) > problem.theta_bound) {
      throw ConvergenceError(
          "parameters diverged; the target moments appear unattainable "
          "within the family",
          iter + 1, max_norm(grad_std), /*diverged=*/true,
          runaway_components(theta_std, problem.theta_bound));
    }
  }

  const double final_gnorm = max_norm(grad_std);
  if (!converged && final_gnorm > problem.grad_tol) {
    if (max_norm(theta_std) > kDegenerateTheta) {
      throw ConvergenceError(
          "parameters diverged; the target moments appear unattainable "
          "within the family",
          iter, final_gnorm, /*diverged=*/true,
          runaway_components(theta_std, kDegenerateTheta));
    }
    if (stalled_out) {
      throw ConvergenceError(
          "optimizer stalled at the double-precision floor before reaching "
          "the gradient tolerance",
          iter, final_gnorm);
    }
    throw ConvergenceError("iteration cap reached before the moment "
                           "equations were satisfied",
                           iter, final_gnorm);
  }

  ProjectionResult result{theta_std, std::move(*point), value, final_gnorm,
                          iter};
  return result;
}

}  // namespace minmarkov
