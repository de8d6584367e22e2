#include "minmarkov/mininfo.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "minmarkov/errors.hpp"

namespace minmarkov {

namespace {

// m^e with an overflow guard; table sizes beyond the guard are rejected
// upstream by the lift cap anyway.
std::uint64_t checked_pow(std::uint64_t m, int e) {
  std::uint64_t out = 1;
  for (int i = 0; i < e; ++i) {
    if (out > UINT64_MAX / m) throw ResourceError("state table too large");
    out *= m;
  }
  return out;
}

void validate(const MinInfoSpec& spec) {
  const int m = spec.base.size();
  if (spec.order < 1) throw InputError("order must be at least 1");
  if (static_cast<int>(spec.marginal.size()) != m) {
    throw InputError("marginal has " + std::to_string(spec.marginal.size()) +
                     " entries for " + std::to_string(m) + " states");
  }
  double sum = 0.0;
  for (double v : spec.marginal) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InputError("marginal must be strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InputError("marginal must sum to 1, got " + std::to_string(sum));
  }
  const std::uint64_t table =
      checked_pow(static_cast<std::uint64_t>(m), spec.order + 1);
  if (spec.dependence.size() != table) {
    throw InputError("dependence table has " +
                     std::to_string(spec.dependence.size()) +
                     " entries, expected m^(order+1) = " +
                     std::to_string(table));
  }
  for (double v : spec.dependence) {
    if (!std::isfinite(v)) throw InputError("dependence must be finite");
  }
  if (!(spec.tol > 0.0)) throw InputError("tol must be positive");
  if (spec.max_iter < 1) throw InputError("max_iter must be at least 1");
}

}  // namespace

MinInfoResult construct(const MinInfoSpec& spec, std::uint64_t state_cap) {
  validate(spec);
  const int m = spec.base.size();

  LiftedSpace lifted = lift(spec.base, spec.order, state_cap);
  auto graph = lifted.graph();
  const std::size_t edges = graph->edge_count();

  // Lifted edge e = u*m + y is the lex rank of the (d+1)-tuple (u_1..u_d, y),
  // so the dependence table doubles as the carrier without reindexing.  The
  // statistics are the last-symbol indicators of all states but the last,
  // negated; the targets are the corresponding marginal entries, negated.
  std::vector<std::vector<double>> stats(
      m - 1, std::vector<double>(edges, 0.0));
  for (std::size_t e = 0; e < edges; ++e) {
    const int y = static_cast<int>(e % static_cast<std::size_t>(m));
    if (y < m - 1) stats[y][e] = -1.0;
  }
  std::vector<double> targets(m - 1);
  for (int i = 0; i < m - 1; ++i) targets[i] = -spec.marginal[i];

  // The indicator statistics are independent modulo the null functions on
  // any lift, so the dense check is only run at small sizes as a guard
  // against recipe regressions.
  const bool small = (lifted.state_count() + m) <= 512;
  ExpFamily family(graph, spec.dependence, std::move(stats),
                   small ? IndependenceCheck::verify
                         : IndependenceCheck::assume);

  ProjectionProblem problem{.family = std::move(family),
                            .targets = std::move(targets)};
  problem.grad_tol = spec.tol;
  problem.max_iter = spec.max_iter;
  ProjectionResult proj = project(problem);

  // Re-evaluate the solution with a tighter eigen tolerance before reporting.
  // The additive decomposition of log w holds per state only up to the
  // *relative* eigen-residual there, which can exceed the absolute residual
  // by the dynamic range of gamma; a few extra power iterations buy the
  // headroom back.
  ThetaPoint point = problem.family.at(proj.theta, 1e-14);

  std::vector<double> kappa = point.solution.eigen.log_right;
  const double gauge = kappa.back();
  for (double& v : kappa) v -= gauge;

  std::vector<double> delta(m, point.potential);
  for (int y = 0; y < m - 1; ++y) delta[y] += proj.theta[y];

  return MinInfoResult{
      spec.base,
      spec.order,
      std::move(lifted),
      spec.dependence,
      spec.marginal,
      std::move(point.solution.w),
      std::move(kappa),
      std::move(delta),
      std::move(point.solution.p),
      proj.theta,
      point.potential,
      OptimizerInfo{proj.iterations, proj.grad_norm, proj.objective,
                    problem.grad_tol, problem.f_reduction_eps,
                    problem.max_iter}};
}

MinInfoResult construct_first_order(const MinInfoSpec& spec) {
  if (spec.order != 1) {
    throw InputError("construct_first_order requires order 1");
  }
  return construct(spec);
}

MinInfoResult construct_higher_order(const MinInfoSpec& spec,
                                     std::uint64_t state_cap) {
  if (spec.order < 2) {
    throw InputError("construct_higher_order requires order >= 2");
  }
  return construct(spec, state_cap);
}

std::vector<double> marginalize(std::span<const double> stationary_d, int m,
                                int d, int k) {
  if (m < 1 || d < 1 || k < 1 || k > d) {
    throw InputError("marginalize needs 1 <= k <= d and a valid state count");
  }
  const std::uint64_t full = checked_pow(static_cast<std::uint64_t>(m), d);
  if (stationary_d.size() != full) {
    throw InputError("distribution has " +
                     std::to_string(stationary_d.size()) +
                     " entries, expected m^d = " + std::to_string(full));
  }
  const std::uint64_t kept = checked_pow(static_cast<std::uint64_t>(m), k);
  const std::uint64_t tail = full / kept;  // m^(d-k) trailing combinations
  std::vector<double> out(kept, 0.0);
  for (std::uint64_t u = 0; u < full; ++u) {
    out[u / tail] += stationary_d[u];
  }
  return out;
}

std::vector<double> marginalize(const MinInfoResult& result, int k) {
  return marginalize(result.stationary_d, result.base.size(), result.order,
                     k);
}

std::vector<double> stationary_marginal(const MinInfoResult& result) {
  return marginalize(result, 1);
}

std::vector<double> inar1_dependence(int m, double alpha) {
  if (m < 2) throw InputError("need at least 2 states");
  std::vector<double> h(static_cast<std::size_t>(m) * m);
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      h[static_cast<std::size_t>(x) * m + y] = alpha * x * y;
    }
  }
  return h;
}

std::vector<double> inar2_dependence(int m, double alpha1, double alpha2) {
  if (m < 2) throw InputError("need at least 2 states");
  std::vector<double> h(static_cast<std::size_t>(m) * m * m);
  std::size_t idx = 0;
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      for (int z = 0; z < m; ++z) {
        h[idx++] = alpha1 * y * z + alpha2 * x * z;
      }
    }
  }
  return h;
}

std::vector<double> binomial_marginal(int n_trials, double nu) {
  if (n_trials < 1) throw InputError("need at least 1 trial");
  if (!(nu > 0.0) || !(nu < 1.0)) {
    throw InputError("success probability must lie strictly in (0, 1)");
  }
  std::vector<double> p(static_cast<std::size_t>(n_trials) + 1);
  // Log-space binomial pmf keeps large N away from overflow.
  const double log_nu = std::log(nu);
  const double log_1mnu = std::log1p(-nu);
  double log_choose = 0.0;  // log C(n, 0)
  for (int k = 0; k <= n_trials; ++k) {
    p[static_cast<std::size_t>(k)] =
        std::exp(log_choose + k * log_nu + (n_trials - k) * log_1mnu);
    if (k < n_trials) {
      log_choose += std::log(static_cast<double>(n_trials - k)) -
                    std::log(static_cast<double>(k + 1));
    }
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace minmarkov
