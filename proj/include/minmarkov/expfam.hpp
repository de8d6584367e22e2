#pragma once

#include <memory>
#include <span>
#include <vector>

#include "minmarkov/perron.hpp"
#include "minmarkov/statespace.hpp"

namespace minmarkov {

struct ThetaPoint;

/// Whether the constructor should run the dense identifiability check.
/// `assume` is for callers whose statistics are independent by construction
/// (e.g. the fixed indicator recipe); the check is O((K+n)^2 E) and dense,
/// so it is also refused above a size guard rather than run forever.
enum class IndependenceCheck { verify, assume };

/// An exponential family of Markov kernels on a strongly connected support:
/// log w_theta = C + sum_k theta_k F_k + kappa(y) - kappa(x) - psi, with
/// kappa and psi supplied by the Perron-Frobenius normalization.
///
/// Construction verifies that the statistics F_1..F_K are linearly
/// independent modulo the null functions kappa(y) - kappa(x) - c; families
/// violating that are rejected, since theta would not be identifiable.
class ExpFamily {
 public:
  /// `carrier` is C per canonical edge; `statistics` holds K per-edge tables.
  ExpFamily(std::shared_ptr<const Digraph> graph, std::vector<double> carrier,
            std::vector<std::vector<double>> statistics,
            IndependenceCheck check = IndependenceCheck::verify);

  int dimension() const;  // K
  const Digraph& graph() const;
  std::shared_ptr<const Digraph> graph_ptr() const;
  const std::vector<double>& carrier() const;
  const std::vector<std::vector<double>>& statistics() const;

  /// Member kernel at the given natural parameter.  The log-scores are
  /// shifted by their maximum before exponentiating, and each kernel row is
  /// renormalized in place, so extreme carriers stay in range.
  ThetaPoint at(std::span<const double> theta, double tol = 1e-12) const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

/// An evaluated family member: the parameter, the solved kernel (with
/// stationary and pair distributions and eigendata), and the potential.
struct ThetaPoint {
  ExpFamily family;
  std::vector<double> theta;
  KernelSolution solution;
  double potential = 0.0;  // psi at theta, including the log-score shift
};

/// Stationary expectations of the statistics, (sum_e pair[e] F_k[e])_k.
/// Equals the gradient of the potential in theta.
std::vector<double> mean_map(const ThetaPoint& point);

/// Fisher information matrix (the Hessian of the potential), K x K, via the
/// stationary pair expectation of products of score functions.  The kappa
/// derivatives inside the scores are central finite differences of kappa
/// (step 1e-5, gauge kappa(last) = 0); the psi derivatives are the exact
/// stationary means.
std::vector<std::vector<double>> fisher_information(const ThetaPoint& point);

}  // namespace minmarkov
