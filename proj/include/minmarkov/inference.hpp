#pragma once

#include <span>
#include <vector>

#include "minmarkov/mininfo.hpp"
#include "minmarkov/sampling.hpp"

namespace minmarkov {

// Parametric dependence H = h0 + sum_k theta_k h_k, each table over the
// (d+1)-tuples of states in canonical lexicographic order.  K may be zero
// (marginal-only model).
struct ParametricModel {
  StateSpace base;
  int order = 1;
  std::vector<double> h0;
  std::vector<std::vector<double>> basis;
};

struct FitOptions {
  double tol = 1e-9;   // optimizer gradient max-norm tolerance
  int max_iter = 500;
  // Adds half a count per state to the windowed last-element frequencies
  // (and renormalizes).  Off by default: the plain estimator refuses data
  // with unobserved states instead of nudging them off the boundary.
  bool smoothing = false;
  std::uint64_t state_cap = kDefaultStateCap;
};

// Estimated model: theta for the dependence coefficients, the implied
// (kernel, kappa, delta) decomposition, and the sample moments that the fit
// matched.
struct FitResult {
  ParametricModel model;
  LiftedSpace lifted;
  std::vector<double> theta;               // K dependence coefficients
  std::vector<double> delta;               // per base state
  std::vector<double> kernel;              // per lifted edge
  std::vector<double> kappa;               // per lifted state, gauge last = 0
  std::vector<double> stationary_d;
  double psi = 0.0;
  std::vector<double> moment_targets;      // K basis means, then marginal
  std::vector<double> window_marginal;     // last-element frequencies used
  OptimizerInfo optimizer;

  // The fitted dependence table h0 + sum_k theta_k h_k.
  std::vector<double> dependence() const;
};

// Moment-matching estimate: targets are the sample means of each basis
// table over sliding windows of d+1 states (denominator n - d), plus the
// windowed last-element frequencies for the marginal.  Throws
// UnobservedStateError when a state never closes a window (unless
// smoothing is on).
FitResult fit(const ParametricModel& model, const TimeSeries& ts,
              const FitOptions& options = {});
FitResult fit(const ParametricModel& model, std::span<const int> series,
              const FitOptions& options = {});

}  // namespace minmarkov
