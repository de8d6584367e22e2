#include "minmarkov/perron.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "minmarkov/errors.hpp"

namespace minmarkov::perron {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void validate(const NonnegMatrix& f) {
  if (!f.graph) throw InputError("matrix has no support graph");
  const Digraph& g = *f.graph;
  if (g.vertex_count() < 2) {
    throw InputError("matrix needs at least 2 states, got " +
                     std::to_string(g.vertex_count()));
  }
  if (f.values.size() != g.edge_count()) {
    throw InputError("matrix has " + std::to_string(f.values.size()) +
                     " values for " + std::to_string(g.edge_count()) +
                     " edges");
  }
  if (!g.strongly_connected()) {
    throw InputError("matrix support is not strongly connected");
  }
  for (double v : f.values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError("matrix entries on the support must be positive and "
                       "finite");
    }
  }
}

// In-edge index: for each vertex the list of edges pointing at it.
struct InEdges {
  std::vector<std::size_t> begin;  // n + 1 offsets
  std::vector<std::size_t> edge;   // edge ids grouped by target
};

InEdges build_in_edges(const Digraph& g) {
  const int n = g.vertex_count();
  InEdges in;
  in.begin.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t e = 0; e < g.edge_count(); ++e) ++in.begin[g.target(e) + 1];
  for (int v = 0; v < n; ++v) in.begin[v + 1] += in.begin[v];
  in.edge.resize(g.edge_count());
  std::vector<std::size_t> cursor(in.begin.begin(), in.begin.end() - 1);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    in.edge[cursor[g.target(e)]++] = e;
  }
  return in;
}

// Diagonal similarity b(x,y) = a(x,y) e^{t(y) - t(x)} that roughly equalizes
// the log row and column sums at every vertex (Osborne balancing, done in
// log space so arbitrarily lopsided inputs cannot overflow).  Balancing
// preserves the spectrum and is undone exactly when the eigenvectors are
// reported, but it keeps the max row sum - and with it the power-iteration
// shift - within a small factor of the spectral radius.
std::vector<double> balance(const Digraph& g, const std::vector<double>& la,
                            const InEdges& in) {
  const int n = g.vertex_count();
  std::vector<double> t(n, 0.0);
  std::vector<double> terms;
  auto log_sum_exp = [&terms]() {
    double top = kNegInf;
    for (double v : terms) top = std::max(top, v);
    double acc = 0.0;
    for (double v : terms) acc += std::exp(v - top);
    return top + std::log(acc);
  };
  const int kMaxSweeps = 100;
  const double kGapTol = 0.1;  // acceptable |log rowsum - log colsum|
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double worst = 0.0;
    for (int x = 0; x < n; ++x) {
      terms.clear();
      for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
        terms.push_back(la[e] + t[g.target(e)]);
      }
      const double row = log_sum_exp();  // log rowsum + t(x)
      terms.clear();
      for (std::size_t k = in.begin[x]; k < in.begin[x + 1]; ++k) {
        const std::size_t e = in.edge[k];
        terms.push_back(la[e] - t[g.source(e)]);
      }
      const double col = log_sum_exp();  // log colsum - t(x)
      worst = std::max(worst, std::abs(row - col - 2.0 * t[x]));
      t[x] = 0.5 * (row - col);
    }
    if (worst <= kGapTol) break;
  }
  return t;
}

struct PowerResult {
  std::vector<double> log_vec;  // original-gauge log eigenvector, max entry 0
  double value = 0.0;           // eigenvalue of the balanced scaled matrix
  long iterations = 0;
  double residual = 0.0;
};

// Power iteration for B + cI where B is the balanced scaled matrix applied
// by `apply`.  Convergence is judged by the eigen-residual of the *original*
// scaled matrix in its max-normalized gauge: with g(x) = e^{sign t(x)} v(x)
// (normalized), the residual components are e^{s2 + sign t(x)} |Bv - value v|
// divided by the gauge maximum, accumulated in log space so the diagonal
// similarity can be undone without overflow.
template <typename Apply>
PowerResult power_iterate(int n, double shift, double s2,
                          const std::vector<double>& t, double sign,
                          long max_iter, double tol, const Apply& apply) {
  PowerResult out;
  std::vector<double> x(n, 1.0), bx(n);
  for (long it = 1; it <= max_iter; ++it) {
    apply(x, bx);
    double top = 0.0;
    for (int i = 0; i < n; ++i) top = std::max(top, bx[i] + shift * x[i]);
    const double value = top - shift;
    double log_gauge_max = kNegInf;  // log max_i e^{sign t(i)} x(i)
    for (int i = 0; i < n; ++i) {
      log_gauge_max = std::max(log_gauge_max, sign * t[i] + std::log(x[i]));
    }
    double log_res = kNegInf;
    for (int i = 0; i < n; ++i) {
      const double diff = std::abs(bx[i] - value * x[i]);
      if (diff > 0.0) {
        log_res = std::max(log_res, sign * t[i] + std::log(diff));
      }
    }
    const double residual = std::exp(s2 + log_res - log_gauge_max);
    out.iterations = it;
    out.value = value;
    out.residual = residual;
    if (residual <= tol) {
      out.log_vec.resize(n);
      for (int i = 0; i < n; ++i) {
        out.log_vec[i] = sign * t[i] + std::log(x[i]) - log_gauge_max;
      }
      // Pin the gauge exactly: the largest entry is 1 by construction up to
      // rounding, so snap it.
      const auto arg =
          std::max_element(out.log_vec.begin(), out.log_vec.end());
      const double off = *arg;
      for (double& v : out.log_vec) v -= off;
      *arg = 0.0;
      return out;
    }
    for (int i = 0; i < n; ++i) x[i] = (bx[i] + shift * x[i]) / top;
  }
  throw ConvergenceError(
      "eigensolver did not reach tolerance " + fmt(tol) + " after " +
          std::to_string(out.iterations) + " iterations (last residual " +
          fmt(out.residual) + ")",
      out.iterations, out.residual);
}

}  // namespace

PerronData solve(const NonnegMatrix& f, double tol, long max_iter) {
  validate(f);
  const Digraph& g = *f.graph;
  const int n = g.vertex_count();
  if (max_iter <= 0) max_iter = 100L * n * n;

  // Scale by the largest entry so tolerances are scale-free; the eigenvalue
  // is scaled back at the end.
  const double scale = *std::max_element(f.values.begin(), f.values.end());
  std::vector<double> la(f.values.size());
  for (std::size_t e = 0; e < la.size(); ++e) {
    la[e] = std::log(f.values[e]) - std::log(scale);
  }

  const InEdges in = build_in_edges(g);
  const std::vector<double> t = balance(g, la, in);

  // Balanced matrix, renormalized so its largest entry is exactly 1; the
  // factor e^{s2} is restored in the reported eigenvalue.
  double s2 = kNegInf;
  for (std::size_t e = 0; e < la.size(); ++e) {
    s2 = std::max(s2, la[e] + t[g.target(e)] - t[g.source(e)]);
  }
  std::vector<double> b(la.size());
  for (std::size_t e = 0; e < la.size(); ++e) {
    b[e] = std::exp(la[e] + t[g.target(e)] - t[g.source(e)] - s2);
  }

  double shift = 0.0;
  for (int x = 0; x < n; ++x) {
    double row = 0.0;
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) row += b[e];
    shift = std::max(shift, row);
  }

  auto apply_right = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int v = 0; v < n; ++v) {
      double acc = 0.0;
      for (std::size_t e = g.row_begin(v); e < g.row_end(v); ++e) {
        acc += b[e] * x[g.target(e)];
      }
      y[v] = acc;
    }
  };
  auto apply_left = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int v = 0; v < n; ++v) {
      for (std::size_t e = g.row_begin(v); e < g.row_end(v); ++e) {
        y[g.target(e)] += b[e] * x[v];
      }
    }
  };

  PowerResult right =
      power_iterate(n, shift, s2, t, +1.0, max_iter, tol, apply_right);
  PowerResult left =
      power_iterate(n, shift, s2, t, -1.0, max_iter, tol, apply_left);

  PerronData out;
  out.log_normalizer = std::log(scale) + s2 + std::log(right.value);
  out.spectral_radius = std::exp(out.log_normalizer);
  out.log_right = std::move(right.log_vec);
  out.log_left = std::move(left.log_vec);
  out.iterations = right.iterations + left.iterations;
  out.residual = std::max(right.residual, left.residual);
  out.right.resize(n);
  out.left.resize(n);
  for (int i = 0; i < n; ++i) {
    out.right[i] = std::exp(out.log_right[i]);
    out.left[i] = std::exp(out.log_left[i]);
  }
  return out;
}

KernelSolution normalize_kernel(const NonnegMatrix& f, double tol) {
  PerronData eigen = solve(f, tol);
  const Digraph& g = *f.graph;
  const int n = g.vertex_count();

  KernelSolution out;
  out.graph = f.graph;
  out.eigen = std::move(eigen);
  out.w.resize(g.edge_count());

  // w = f gamma / (Z gamma) row by row.  Each row is assembled in log space
  // with its own max subtracted, then normalized to sum to exactly 1; the
  // explicit normalization removes the eigen-residual from the
  // stochasticity constraint and the per-row shift keeps rows with a huge
  // dynamic range representable.
  for (int x = 0; x < n; ++x) {
    double top = kNegInf;
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      out.w[e] = std::log(f.values[e]) + out.eigen.log_right[g.target(e)];
      top = std::max(top, out.w[e]);
    }
    double row = 0.0;
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      out.w[e] = std::exp(out.w[e] - top);
      row += out.w[e];
    }
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      out.w[e] /= row;
    }
  }

  // p = beta gamma renormalized, also assembled in log space.
  out.p.resize(n);
  double ptop = kNegInf;
  for (int i = 0; i < n; ++i) {
    out.p[i] = out.eigen.log_left[i] + out.eigen.log_right[i];
    ptop = std::max(ptop, out.p[i]);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    out.p[i] = std::exp(out.p[i] - ptop);
    total += out.p[i];
  }
  for (int i = 0; i < n; ++i) out.p[i] /= total;

  out.pair.resize(g.edge_count());
  for (int x = 0; x < n; ++x) {
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      out.pair[e] = out.p[x] * out.w[e];
    }
  }
  return out;
}

std::vector<double> stationary(const NonnegMatrix& f, double tol) {
  PerronData eigen = solve(f, tol);
  const int n = f.graph->vertex_count();
  std::vector<double> p(n);
  double top = kNegInf;
  for (int i = 0; i < n; ++i) {
    p[i] = eigen.log_left[i] + eigen.log_right[i];
    top = std::max(top, p[i]);
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    p[i] = std::exp(p[i] - top);
    total += p[i];
  }
  for (int i = 0; i < n; ++i) p[i] /= total;
  return p;
}

}  // namespace minmarkov::perron
