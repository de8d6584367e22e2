#pragma once

#include <span>
#include <vector>

#include "minmarkov/projection.hpp"
#include "minmarkov/statespace.hpp"

namespace minmarkov {

// Inputs for a minimum-information construction: a dependence table H over
// the (d+1)-tuples of states, in canonical lexicographic order, and the
// desired first-order stationary marginal r.
struct MinInfoSpec {
  StateSpace base;
  int order = 1;                    // d
  std::vector<double> dependence;   // H, m^(d+1) entries
  std::vector<double> marginal;     // r, strictly positive, sums to 1
  double tol = 1e-9;                // optimizer gradient max-norm tolerance
  int max_iter = 500;
};

struct OptimizerInfo {
  int iterations = 0;
  double grad_norm = 0.0;
  double objective = 0.0;
  double grad_tol = 0.0;
  double f_reduction_eps = 0.0;
  int max_iter = 0;
};

// The constructed order-d kernel together with its decomposition
//   log w(x_{d+1} | x_{1:d}) = H + kappa(x_{2:d+1}) - kappa(x_{1:d})
//                                - delta(x_{d+1})
// where kappa is reported in the gauge kappa(last lifted state) = 0 and
// delta is unique.
struct MinInfoResult {
  StateSpace base;
  int order = 1;
  LiftedSpace lifted;
  std::vector<double> dependence;    // echo of the resolved H table
  std::vector<double> marginal;      // echo of r
  std::vector<double> kernel;        // w per lifted edge (canonical order)
  std::vector<double> kappa;         // per lifted state, kappa(last) = 0
  std::vector<double> delta;         // per base state
  std::vector<double> stationary_d;  // stationary law of d-blocks
  std::vector<double> theta;         // natural parameters behind the solve
  double psi = 0.0;
  OptimizerInfo optimizer;
};

// One engine for any order d >= 1: lifts the space, projects onto the
// marginal constraints, and extracts (kappa, delta).
MinInfoResult construct(const MinInfoSpec& spec,
                        std::uint64_t state_cap = kDefaultStateCap);

// Order-specific entry points; they validate `order` and defer to the engine.
MinInfoResult construct_first_order(const MinInfoSpec& spec);
MinInfoResult construct_higher_order(const MinInfoSpec& spec,
                                     std::uint64_t state_cap = kDefaultStateCap);

// Sum a distribution on d-tuples over its trailing coordinates, keeping the
// first k; k = 1 gives the first-order stationary marginal.
std::vector<double> marginalize(std::span<const double> stationary_d, int m,
                                int d, int k);
std::vector<double> marginalize(const MinInfoResult& result, int k);
std::vector<double> stationary_marginal(const MinInfoResult& result);

// Dependence tables for the count-series families of the worked examples,
// using the state's integer code as its numeric value.
std::vector<double> inar1_dependence(int m, double alpha);       // a*x*y
std::vector<double> inar2_dependence(int m, double alpha1,
                                     double alpha2);             // a1*y*z + a2*x*z

// Binomial(n_trials, nu) probabilities over states 0..n_trials.
std::vector<double> binomial_marginal(int n_trials, double nu);

}  // namespace minmarkov
