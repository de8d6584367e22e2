#include "minmarkov/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "minmarkov/errors.hpp"
#include "minmarkov/perron.hpp"
#include "minmarkov/random.hpp"

namespace minmarkov {

namespace {

void require_positive_kernel(const Kernel& kernel, const char* name) {
  if (!kernel.graph) throw InputError(std::string(name) + " has no support");
  if (kernel.w.size() != kernel.graph->edge_count()) {
    throw InputError(std::string(name) +
                     " does not have one probability per edge");
  }
  for (double v : kernel.w) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InputError(std::string(name) +
                       " must be strictly positive on its support");
    }
  }
}

void require_same_support(const Kernel& a, const Kernel& b) {
  if (a.graph.get() != b.graph.get() &&
      !a.graph->same_structure(*b.graph)) {
    throw InputError("kernels live on different supports");
  }
}

}  // namespace

Kernel result_kernel(const MinInfoResult& result) {
  return Kernel{result.lifted.graph(), result.kernel};
}

std::vector<double> kernel_stationary(const Kernel& kernel, double tol) {
  require_positive_kernel(kernel, "kernel");
  return perron::stationary(NonnegMatrix{kernel.graph, kernel.w}, tol);
}

double divergence_rate(const Kernel& v, const Kernel& w,
                       std::span<const double> p_v) {
  require_positive_kernel(v, "first kernel");
  require_positive_kernel(w, "second kernel");
  require_same_support(v, w);
  const Digraph& g = *v.graph;
  if (p_v.size() != static_cast<std::size_t>(g.vertex_count())) {
    throw InputError("stationary vector does not match the state count");
  }
  double rate = 0.0;
  for (int x = 0; x < g.vertex_count(); ++x) {
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      rate += p_v[x] * v.w[e] * std::log(v.w[e] / w.w[e]);
    }
  }
  return rate;
}

double divergence_rate(const Kernel& v, const Kernel& w) {
  return divergence_rate(v, w, kernel_stationary(v));
}

double pythagorean_residual(const Kernel& w, const Kernel& w_star,
                            const Kernel& v) {
  const std::vector<double> p_w = kernel_stationary(w);
  const std::vector<double> p_star = kernel_stationary(w_star);
  return divergence_rate(w, w_star, p_w) +
         divergence_rate(w_star, v, p_star) - divergence_rate(w, v, p_w);
}

double path_kl_rate(const Kernel& v, const Kernel& w, int n) {
  require_positive_kernel(v, "first kernel");
  require_positive_kernel(w, "second kernel");
  require_same_support(v, w);
  if (n < 1) throw InputError("path length must be at least 1");

  const Digraph& g = *v.graph;
  const int m = g.vertex_count();
  double paths = 1.0;
  for (int i = 0; i < n; ++i) {
    paths *= m;
    if (paths > 1e6) {
      throw ResourceError("path enumeration needs m^n <= 1e6 (got m = " +
                          std::to_string(m) + ", n = " + std::to_string(n) +
                          ")");
    }
  }

  const std::vector<double> p_v = kernel_stationary(v);
  const std::vector<double> p_w = kernel_stationary(w);
  std::vector<double> log_v(v.w.size()), log_w(w.w.size());
  for (std::size_t e = 0; e < v.w.size(); ++e) {
    log_v[e] = std::log(v.w[e]);
    log_w[e] = std::log(w.w[e]);
  }

  // Depth-first enumeration of every path x_1..x_n, carrying the running
  // log-probabilities under both laws.
  double kl = 0.0;
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  std::vector<double> lv(static_cast<std::size_t>(n), 0.0);
  std::vector<double> lw(static_cast<std::size_t>(n), 0.0);
  int depth = 0;
  while (depth >= 0) {
    if (state[depth] == m) {
      state[depth] = 0;
      --depth;
      if (depth >= 0) ++state[depth];
      continue;
    }
    const int x = state[depth];
    if (depth == 0) {
      lv[0] = std::log(p_v[x]);
      lw[0] = std::log(p_w[x]);
    } else {
      const auto edge = g.edge_index(state[depth - 1], x);
      if (!edge) {  // path leaves the support: zero mass under both laws
        ++state[depth];
        continue;
      }
      lv[depth] = lv[depth - 1] + log_v[*edge];
      lw[depth] = lw[depth - 1] + log_w[*edge];
    }
    if (depth == n - 1) {
      kl += std::exp(lv[depth]) * (lv[depth] - lw[depth]);
      ++state[depth];
    } else {
      ++depth;
    }
  }
  return kl / n;
}

JointTable ipf_scale(std::span<const double> weights,
                     std::span<const double> row_target,
                     std::span<const double> col_target, double tol,
                     int max_sweeps) {
  const std::size_t m = row_target.size();
  if (m < 2) throw InputError("need at least 2 states");
  if (col_target.size() != m) {
    throw InputError("row and column targets must have equal length");
  }
  if (weights.size() != m * m) {
    throw InputError("weight matrix must be m x m");
  }
  auto check_target = [](std::span<const double> t, const char* name) {
    double sum = 0.0;
    for (double v : t) {
      if (!std::isfinite(v) || v <= 0.0) {
        throw InputError(std::string(name) +
                         " target must be strictly positive");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InputError(std::string(name) + " target must sum to 1");
    }
  };
  check_target(row_target, "row");
  check_target(col_target, "column");
  for (double v : weights) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw InputError("weights must be strictly positive");
    }
  }

  JointTable joint{static_cast<int>(m),
                   std::vector<double>(weights.begin(), weights.end()),
                   std::equal(row_target.begin(), row_target.end(),
                              col_target.begin(), col_target.end())};
  double err = 0.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t x = 0; x < m; ++x) {
      double rs = 0.0;
      for (std::size_t y = 0; y < m; ++y) rs += joint.p[x * m + y];
      const double scale = row_target[x] / rs;
      for (std::size_t y = 0; y < m; ++y) joint.p[x * m + y] *= scale;
    }
    for (std::size_t y = 0; y < m; ++y) {
      double cs = 0.0;
      for (std::size_t x = 0; x < m; ++x) cs += joint.p[x * m + y];
      const double scale = col_target[y] / cs;
      for (std::size_t x = 0; x < m; ++x) joint.p[x * m + y] *= scale;
    }
    // Columns are exact after the sweep; only rows can still be off.
    err = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      double rs = 0.0;
      for (std::size_t y = 0; y < m; ++y) rs += joint.p[x * m + y];
      err = std::max(err, std::abs(rs - row_target[x]));
    }
    if (err <= tol) return joint;
  }
  throw ConvergenceError("margin scaling did not reach tolerance",
                         max_sweeps, err);
}

Kernel random_kernel_with_stationary(std::span<const double> r,
                                     std::uint64_t seed) {
  const std::size_t m = r.size();
  std::mt19937_64 gen(seed);
  std::vector<double> weights(m * m);
  for (double& v : weights) v = std::exp(2.0 * uniform01(gen) - 1.0);
  const JointTable joint = ipf_scale(weights, r, r);

  auto graph = std::make_shared<const Digraph>(
      Digraph::complete(static_cast<int>(m)));
  std::vector<double> w(m * m);
  for (std::size_t x = 0; x < m; ++x) {
    double rs = 0.0;
    for (std::size_t y = 0; y < m; ++y) rs += joint.p[x * m + y];
    for (std::size_t y = 0; y < m; ++y) w[x * m + y] = joint.p[x * m + y] / rs;
  }
  return Kernel{std::move(graph), std::move(w)};
}

std::vector<double> exact_acf(const Kernel& kernel, std::span<const double> p,
                              std::span<const double> values, int max_lag) {
  require_positive_kernel(kernel, "kernel");
  const Digraph& g = *kernel.graph;
  const auto n = static_cast<std::size_t>(g.vertex_count());
  if (p.size() != n || values.size() != n) {
    throw InputError("stationary law and values must cover every state");
  }
  if (max_lag < 0) throw InputError("max_lag must be nonnegative");

  double mean = 0.0;
  for (std::size_t x = 0; x < n; ++x) mean += p[x] * values[x];
  std::vector<double> centered(n);
  double var = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    centered[x] = values[x] - mean;
    var += p[x] * centered[x] * centered[x];
  }
  if (!(var > 0.0)) {
    throw InputError("values are constant under the stationary law; "
                     "autocorrelation is undefined");
  }

  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 1.0);
  std::vector<double> h = centered;  // E[g(X_k) - mean | X_0 = x]
  std::vector<double> next(n);
  for (int lag = 1; lag <= max_lag; ++lag) {
    for (std::size_t x = 0; x < n; ++x) {
      double acc = 0.0;
      for (std::size_t e = g.row_begin(static_cast<int>(x));
           e < g.row_end(static_cast<int>(x)); ++e) {
        acc += kernel.w[e] * h[static_cast<std::size_t>(g.target(e))];
      }
      next[x] = acc;
    }
    h.swap(next);
    double cov = 0.0;
    for (std::size_t x = 0; x < n; ++x) cov += p[x] * centered[x] * h[x];
    acf[static_cast<std::size_t>(lag)] = cov / var;
  }
  return acf;
}

std::vector<double> exact_acf(const MinInfoResult& result, int max_lag) {
  std::vector<double> values(
      static_cast<std::size_t>(result.lifted.state_count()));
  for (std::size_t u = 0; u < values.size(); ++u) {
    values[u] = result.lifted.first_symbol(static_cast<int>(u));
  }
  return exact_acf(result_kernel(result), result.stationary_d, values,
                   max_lag);
}

std::vector<double> exact_pacf(std::span<const double> acf) {
  if (acf.size() < 2) {
    throw InputError("need the autocorrelation at lag 1 or beyond");
  }
  if (std::abs(acf[0] - 1.0) > 1e-12) {
    throw InputError("autocorrelation sequence must start with 1 at lag 0");
  }
  const std::size_t lags = acf.size() - 1;
  std::vector<double> pacf(lags);
  std::vector<double> phi(lags + 1, 0.0), prev(lags + 1, 0.0);
  double err = 1.0;  // innovation variance, in acf units
  for (std::size_t k = 1; k <= lags; ++k) {
    double num = acf[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * acf[k - j];
    if (!(err > 1e-14)) {
      throw InputError("autocorrelation sequence is not positive definite");
    }
    const double reflect = num / err;
    phi[k] = reflect;
    for (std::size_t j = 1; j < k; ++j) {
      phi[j] = prev[j] - reflect * prev[k - j];
    }
    err *= (1.0 - reflect * reflect);
    if (err < -1e-12) {
      throw InputError("autocorrelation sequence is not positive definite");
    }
    pacf[k - 1] = reflect;
    prev = phi;
  }
  return pacf;
}

}  // namespace minmarkov
