#include "minmarkov/inference.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "minmarkov/errors.hpp"

namespace minmarkov {

namespace {

std::uint64_t checked_pow(std::uint64_t m, int e) {
  std::uint64_t out = 1;
  for (int i = 0; i < e; ++i) {
    if (out > UINT64_MAX / m) throw ResourceError("state table too large");
    out *= m;
  }
  return out;
}

void validate(const ParametricModel& model, std::span<const int> series) {
  const int m = model.base.size();
  if (model.order < 1) throw InputError("order must be at least 1");
  const std::uint64_t table =
      checked_pow(static_cast<std::uint64_t>(m), model.order + 1);
  if (model.h0.size() != table) {
    throw InputError("h0 table has " + std::to_string(model.h0.size()) +
                     " entries, expected m^(order+1) = " +
                     std::to_string(table));
  }
  for (const auto& h : model.basis) {
    if (h.size() != table) {
      throw InputError("basis table size does not match m^(order+1)");
    }
  }
  if (series.size() <= static_cast<std::size_t>(model.order)) {
    throw InputError("series must be longer than the model order");
  }
  for (int v : series) {
    if (v < 0 || v >= m) {
      throw InputError("series value " + std::to_string(v) +
                       " outside 0.." + std::to_string(m - 1));
    }
  }
}

}  // namespace

std::vector<double> FitResult::dependence() const {
  std::vector<double> h = model.h0;
  for (std::size_t k = 0; k < model.basis.size(); ++k) {
    for (std::size_t e = 0; e < h.size(); ++e) {
      h[e] += theta[k] * model.basis[k][e];
    }
  }
  return h;
}

FitResult fit(const ParametricModel& model, std::span<const int> series,
              const FitOptions& options) {
  validate(model, series);
  const int m = model.base.size();
  const int d = model.order;
  const int big_k = static_cast<int>(model.basis.size());
  const auto n = series.size();
  const double windows = static_cast<double>(n - static_cast<std::size_t>(d));

  LiftedSpace lifted = lift(model.base, d, options.state_cap);
  auto graph = lifted.graph();

  // Sliding-window sample moments: window t covers (x_{t-d}, ..., x_t); its
  // lex rank is the canonical edge index, so the tables index directly.
  std::vector<double> basis_mean(static_cast<std::size_t>(big_k), 0.0);
  std::vector<double> counts(static_cast<std::size_t>(m), 0.0);
  {
    std::vector<int> head(series.begin(), series.begin() + d);
    int u = lifted.encode(head);
    for (std::size_t t = static_cast<std::size_t>(d); t < n; ++t) {
      const int y = series[t];
      const std::size_t e =
          static_cast<std::size_t>(u) * static_cast<std::size_t>(m) +
          static_cast<std::size_t>(y);
      for (int k = 0; k < big_k; ++k) {
        basis_mean[static_cast<std::size_t>(k)] += model.basis[k][e];
      }
      counts[static_cast<std::size_t>(y)] += 1.0;
      u = lifted.successor(u, y);
    }
  }
  for (double& v : basis_mean) v /= windows;

  std::vector<double> marginal(static_cast<std::size_t>(m));
  if (options.smoothing) {
    const double denom = windows + 0.5 * m;
    for (int i = 0; i < m; ++i) {
      marginal[static_cast<std::size_t>(i)] =
          (counts[static_cast<std::size_t>(i)] + 0.5) / denom;
    }
  } else {
    std::vector<int> missing;
    for (int i = 0; i < m; ++i) {
      if (counts[static_cast<std::size_t>(i)] == 0.0) missing.push_back(i);
    }
    if (!missing.empty()) {
      std::string names;
      for (std::size_t i = 0; i < missing.size(); ++i) {
        if (i > 0) names += ", ";
        names += model.base.label(missing[i]);
      }
      throw UnobservedStateError(
          "state(s) " + names +
          " never close an observation window; the empirical marginal sits "
          "on the boundary",
          missing);
    }
    for (int i = 0; i < m; ++i) {
      marginal[static_cast<std::size_t>(i)] =
          counts[static_cast<std::size_t>(i)] / windows;
    }
  }

  // Combined family: the basis statistics first, then the marginal
  // indicators exactly as in the plain construction.
  const std::size_t edges = graph->edge_count();
  std::vector<std::vector<double>> stats;
  stats.reserve(static_cast<std::size_t>(big_k + m - 1));
  for (const auto& h : model.basis) stats.push_back(h);
  for (int i = 0; i < m - 1; ++i) {
    std::vector<double> indicator(edges, 0.0);
    for (std::size_t e = static_cast<std::size_t>(i); e < edges;
         e += static_cast<std::size_t>(m)) {
      indicator[e] = -1.0;
    }
    stats.push_back(std::move(indicator));
  }
  std::vector<double> targets;
  targets.reserve(stats.size());
  for (double v : basis_mean) targets.push_back(v);
  for (int i = 0; i < m - 1; ++i) {
    targets.push_back(-marginal[static_cast<std::size_t>(i)]);
  }

  ExpFamily family(graph, model.h0, std::move(stats));
  ProjectionProblem problem{.family = std::move(family),
                            .targets = std::move(targets)};
  problem.grad_tol = options.tol;
  problem.max_iter = options.max_iter;
  ProjectionResult proj = project(problem);

  // Reported kernel and potentials come from a re-solve with a tighter eigen
  // tolerance: the per-state decomposition of log w is only as good as the
  // relative eigen-residual, which the extra iterations shrink cheaply.
  ThetaPoint point = problem.family.at(proj.theta, 1e-14);

  std::vector<double> kappa = point.solution.eigen.log_right;
  const double gauge = kappa.back();
  for (double& v : kappa) v -= gauge;

  std::vector<double> delta(static_cast<std::size_t>(m), point.potential);
  for (int y = 0; y < m - 1; ++y) {
    delta[static_cast<std::size_t>(y)] +=
        proj.theta[static_cast<std::size_t>(big_k + y)];
  }

  FitResult result{
      model,
      std::move(lifted),
      std::vector<double>(proj.theta.begin(), proj.theta.begin() + big_k),
      std::move(delta),
      std::move(point.solution.w),
      std::move(kappa),
      std::move(point.solution.p),
      point.potential,
      /*moment_targets=*/{},
      std::move(marginal),
      OptimizerInfo{proj.iterations, proj.grad_norm, proj.objective,
                    problem.grad_tol, problem.f_reduction_eps,
                    problem.max_iter}};
  result.moment_targets = basis_mean;
  for (double v : result.window_marginal) result.moment_targets.push_back(v);
  return result;
}

FitResult fit(const ParametricModel& model, const TimeSeries& ts,
              const FitOptions& options) {
  if (ts.base.size() != model.base.size()) {
    throw InputError("series and model use different state spaces");
  }
  return fit(model, std::span<const int>(ts.values), options);
}

}  // namespace minmarkov
