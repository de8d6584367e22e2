#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "minmarkov/mininfo.hpp"
#include "minmarkov/statespace.hpp"

namespace minmarkov {

// A row-stochastic kernel on an explicit support graph, one probability per
// canonical edge.
struct Kernel {
  std::shared_ptr<const Digraph> graph;
  std::vector<double> w;
};

// View of a construction result as a plain kernel on the lifted graph.
Kernel result_kernel(const MinInfoResult& result);

// Stationary distribution of a strictly positive kernel.
std::vector<double> kernel_stationary(const Kernel& kernel,
                                      double tol = 1e-12);

// Divergence rate D(v|w) = sum_x p_v(x) sum_y v(y|x) log(v(y|x)/w(y|x)).
// Both kernels must be strictly positive on the same support.  The overload
// without p_v solves for the stationary distribution of v first.
double divergence_rate(const Kernel& v, const Kernel& w,
                       std::span<const double> p_v);
double divergence_rate(const Kernel& v, const Kernel& w);

// D(w|w_star) + D(w_star|v) - D(w|v); near zero exactly when w_star is the
// projection splitting the moment constraints of w from the family of v.
double pythagorean_residual(const Kernel& w, const Kernel& w_star,
                            const Kernel& v);

// Normalized divergence of length-n path laws: KL(paths of v || paths of w)
// divided by n, by brute-force enumeration of all m^n paths (capped at
// 10^6).  Tends to divergence_rate(v, w) as n grows.
double path_kl_rate(const Kernel& v, const Kernel& w, int n);

// A joint distribution over state pairs, row-major m x m.
struct JointTable {
  int m = 0;
  std::vector<double> p;
  bool stationary = false;  // both margins equal, so shift-invariant
};

// Iterative proportional fitting: scales a strictly positive matrix until
// its row margins match row_target and column margins match col_target,
// each within tol (max-norm).  Alternates exact row and column
// normalizations; at most max_sweeps rounds.
JointTable ipf_scale(std::span<const double> weights,
                     std::span<const double> row_target,
                     std::span<const double> col_target, double tol = 1e-12,
                     int max_sweeps = 100000);

// Random strictly positive kernel with stationary distribution r: draws
// seeded positive weights, scales them to margins (r, r), and normalizes
// rows.  Deterministic given the seed.
Kernel random_kernel_with_stationary(std::span<const double> r,
                                     std::uint64_t seed);

// Exact autocorrelation of g(X_t) for a chain with kernel `kernel` and
// stationary law p, computed against kernel powers; returns lags 0..max_lag
// with acf[0] = 1.  `values` holds g per state.
std::vector<double> exact_acf(const Kernel& kernel, std::span<const double> p,
                              std::span<const double> values, int max_lag);

// Convenience for construction results: the observed value of a lifted
// state is the integer code of its first symbol.
std::vector<double> exact_acf(const MinInfoResult& result, int max_lag);

// Partial autocorrelations via the Levinson-Durbin recursion; input is an
// autocorrelation sequence with acf[0] = 1, output holds lags 1..L.
std::vector<double> exact_pacf(std::span<const double> acf);

}  // namespace minmarkov
