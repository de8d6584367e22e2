#pragma once

#include <memory>
#include <vector>

#include "minmarkov/statespace.hpp"

namespace minmarkov {

/// A matrix that is strictly positive exactly on the edges of its support
/// graph and structurally zero elsewhere.  `values[e]` is the entry of the
/// canonical edge e.
struct NonnegMatrix {
  std::shared_ptr<const Digraph> graph;
  std::vector<double> values;
};

/// Perron-Frobenius eigendata of a NonnegMatrix.  The right eigenvector
/// gamma and left eigenvector beta are each scaled so their largest entry is
/// exactly 1; log_normalizer = log(spectral_radius) and log_right = log(gamma)
/// are the additive potentials of the normalized kernel.
struct PerronData {
  double spectral_radius = 0.0;
  double log_normalizer = 0.0;       // psi
  std::vector<double> right;         // gamma
  std::vector<double> left;          // beta
  std::vector<double> log_right;     // kappa
  std::vector<double> log_left;      // log(beta)
  long iterations = 0;
  double residual = 0.0;
};

/// A row-stochastic kernel together with its stationary data.  `pair[e]` is
/// the stationary edge distribution p(x) w(y|x); its row margins equal p
/// exactly and its column margins equal p up to the eigensolver residual.
struct KernelSolution {
  std::shared_ptr<const Digraph> graph;
  std::vector<double> w;
  std::vector<double> p;
  std::vector<double> pair;
  PerronData eigen;
};

namespace perron {

/// Dominant eigendata of an irreducible nonnegative matrix by power iteration
/// on the shifted matrix f + cI with c = max row sum; the shift keeps the
/// iteration convergent on periodic supports and leaves the eigenvectors
/// unchanged.  The input is normalized by its largest entry first, so `tol`
/// bounds the max-norm eigen-residual of the scale-free problem.
///
/// Before iterating, the matrix is balanced by a diagonal similarity
/// (Osborne sweeps in log space).  Balancing changes neither the spectrum
/// nor the reported eigenvectors, but it keeps the max row sum within a
/// small factor of the spectral radius, so the shifted iteration stays fast
/// even when the raw row sums span many orders of magnitude.
///
/// Throws InputError for nonpositive entries or a support that is not
/// strongly connected, and ConvergenceError (carrying the last residual)
/// when `max_iter` iterations (default 100 n^2) do not reach `tol`.
PerronData solve(const NonnegMatrix& f, double tol = 1e-12, long max_iter = 0);

/// The unique Markov kernel w(y|x) = f(x,y) gamma(y) / (Z gamma(x)) with the
/// same support as f, returned with its stationary distribution and pair
/// distribution.  Rows are renormalized to sum to 1 exactly.
KernelSolution normalize_kernel(const NonnegMatrix& f, double tol = 1e-12);

/// Stationary distribution of the normalized kernel of f, computed from the
/// left and right eigenvectors as beta * gamma renormalized.
std::vector<double> stationary(const NonnegMatrix& f, double tol = 1e-12);

}  // namespace perron
}  // namespace minmarkov
