// Acceptance battery: ten end-to-end checks, one line of output each, exit
// code equal to the number of failures.  Every check has a hard runtime
// budget and fixed seeds, so a run is reproducible and self-timing.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "minmarkov/diagnostics.hpp"
#include "minmarkov/expfam.hpp"
#include "minmarkov/inference.hpp"
#include "minmarkov/mininfo.hpp"
#include "minmarkov/random.hpp"
#include "minmarkov/sampling.hpp"
#include "minmarkov/statespace.hpp"
#include "test_support.hpp"

using namespace minmarkov;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

MinInfoSpec spec_for(int m, int order, std::vector<double> h,
                     std::vector<double> r, double tol) {
  return MinInfoSpec{StateSpace::integer_range(m), order, std::move(h),
                     std::move(r), tol};
}

// Random strictly positive kernel with a bounded dynamic range, so that
// divergences between two draws stay in a regime where the n-step gap to
// the rate is informative rather than dominated by the initial law.
Kernel random_positive_kernel(int m, std::mt19937_64& gen) {
  auto graph = std::make_shared<const Digraph>(Digraph::complete(m));
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> w(static_cast<std::size_t>(m) * m);
  for (int x = 0; x < m; ++x) {
    double sum = 0.0;
    for (int y = 0; y < m; ++y) sum += (w[x * m + y] = u(gen));
    for (int y = 0; y < m; ++y) w[x * m + y] /= sum;
  }
  return Kernel{std::move(graph), std::move(w)};
}

// Stationary mean of a per-edge table under a fitted chain.
double fitted_mean(const FitResult& res, const std::vector<double>& table) {
  const Digraph& g = *res.lifted.graph();
  double acc = 0.0;
  for (int u = 0; u < g.vertex_count(); ++u) {
    for (std::size_t e = g.row_begin(u); e < g.row_end(u); ++e) {
      acc += res.stationary_d[u] * res.kernel[e] * table[e];
    }
  }
  return acc;
}

std::vector<double> fitted_marginal(const FitResult& res) {
  const Digraph& g = *res.lifted.graph();
  const int m = res.model.base.size();
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  for (int u = 0; u < g.vertex_count(); ++u) {
    for (std::size_t e = g.row_begin(u); e < g.row_end(u); ++e) {
      out[e % static_cast<std::size_t>(m)] +=
          res.stationary_d[u] * res.kernel[e];
    }
  }
  return out;
}

// --- criterion 1: zero dependence collapses to the independent chain -------

Outcome independence_reduction() {
  std::mt19937_64 gen(101);
  double kernel_err = 0.0, delta_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int m = 2 + t % 7;
    const auto r = testsupport::random_marginal(gen, m);
    const auto res = construct(
        spec_for(m, 1, zeros(static_cast<std::size_t>(m) * m), r, 1e-11));
    for (int x = 0; x < m; ++x) {
      for (int y = 0; y < m; ++y) {
        kernel_err = std::max(
            kernel_err,
            std::abs(res.kernel[static_cast<std::size_t>(x) * m + y] - r[y]));
      }
    }
    for (int y = 0; y < m; ++y) {
      delta_err = std::max(delta_err, std::abs(res.delta[y] + std::log(r[y])));
    }
  }
  return {kernel_err <= 1e-9 && delta_err <= 1e-9,
          "kernel_err=" + fmt(kernel_err) + " delta_err=" + fmt(delta_err) +
              " tol=1e-9"};
}

// --- criterion 2: pair law agrees with iterative proportional fitting ------

Outcome scaling_agreement() {
  std::mt19937_64 gen(202);
  double err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int m = 2 + t % 5;
    const std::size_t edges = static_cast<std::size_t>(m) * m;
    const auto h = testsupport::random_table(gen, edges, -1.0, 1.0);
    const auto r = testsupport::random_marginal(gen, m);
    const auto res = construct(spec_for(m, 1, h, r, 1e-11));
    std::vector<double> weights(edges);
    for (std::size_t e = 0; e < edges; ++e) weights[e] = std::exp(h[e]);
    const JointTable scaled = ipf_scale(weights, r, r);
    for (int x = 0; x < m; ++x) {
      for (int y = 0; y < m; ++y) {
        const std::size_t e = static_cast<std::size_t>(x) * m + y;
        err = std::max(err,
                       std::abs(res.stationary_d[x] * res.kernel[e] -
                                scaled.p[e]));
      }
    }
  }
  return {err <= 1e-8, "pair_vs_ipf_err=" + fmt(err) + " tol=1e-8"};
}

// --- criterion 3: divergence split around the constructed kernel -----------

Outcome divergence_split() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> theta_u(-2.0, 2.0);
  std::uint64_t kernel_seed = 9000;
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int m = 2 + t % 4;
    const std::size_t edges = static_cast<std::size_t>(m) * m;
    const auto h = testsupport::random_table(gen, edges, -1.0, 1.0);
    const auto r = testsupport::random_marginal(gen, m);
    const auto res = construct(spec_for(m, 1, h, r, 1e-10));
    const Kernel star = result_kernel(res);

    std::vector<std::vector<double>> stats(
        static_cast<std::size_t>(m - 1), std::vector<double>(edges, 0.0));
    for (std::size_t e = 0; e < edges; ++e) {
      const int y = static_cast<int>(e % static_cast<std::size_t>(m));
      if (y < m - 1) stats[static_cast<std::size_t>(y)][e] = -1.0;
    }
    const ExpFamily family(res.lifted.graph(), res.dependence,
                           std::move(stats));
    for (int pair = 0; pair < 10; ++pair) {
      const Kernel w = random_kernel_with_stationary(r, kernel_seed++);
      std::vector<double> theta(static_cast<std::size_t>(m - 1));
      for (double& v : theta) v = theta_u(gen);
      const ThetaPoint vp = family.at(theta);
      const Kernel v{vp.solution.graph, vp.solution.w};
      worst = std::max(worst, std::abs(pythagorean_residual(w, star, v)));
    }
  }
  return {worst <= 1e-8, "max_residual=" + fmt(worst) + " tol=1e-8"};
}

// --- criterion 4: derivatives of the potential -----------------------------

Outcome derivative_fidelity() {
  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> theta_u(-0.8, 0.8);
  const double h = 1e-5;
  double mean_err = 0.0, fisher_err = 0.0, min_eig = 1.0;
  for (int fam = 0; fam < 5; ++fam) {
    const int m = 3 + fam % 3;
    const std::size_t edges = static_cast<std::size_t>(m) * m;
    const int k = 2 + fam % 2;
    auto graph = std::make_shared<const Digraph>(Digraph::complete(m));
    const auto carrier = testsupport::random_table(gen, edges, -1.0, 1.0);
    std::vector<std::vector<double>> stats;
    for (int i = 0; i < k; ++i) {
      stats.push_back(testsupport::random_table(gen, edges, -1.0, 1.0));
    }
    const ExpFamily family(graph, carrier, stats);

    const auto psi = [&](const std::vector<double>& th) {
      return family.at(th).potential;
    };
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<double> theta(static_cast<std::size_t>(k));
      for (double& v : theta) v = theta_u(gen);
      const ThetaPoint point = family.at(theta);
      const auto mm = mean_map(point);
      const auto fisher = fisher_information(point);

      double fd_scale = 0.0, mm_diff = 0.0;
      for (int i = 0; i < k; ++i) {
        const double fd = testsupport::central_diff(psi, theta,
                                                    static_cast<std::size_t>(i),
                                                    h);
        fd_scale = std::max(fd_scale, std::abs(fd));
        mm_diff = std::max(mm_diff, std::abs(mm[static_cast<std::size_t>(i)] -
                                             fd));
      }
      mean_err = std::max(mean_err, mm_diff / std::max(fd_scale, 1e-9));

      double fj_scale = 0.0, fj_diff = 0.0;
      for (int j = 0; j < k; ++j) {
        auto up = theta, down = theta;
        up[static_cast<std::size_t>(j)] += h;
        down[static_cast<std::size_t>(j)] -= h;
        const auto mu = mean_map(family.at(up));
        const auto md = mean_map(family.at(down));
        for (int i = 0; i < k; ++i) {
          const double fd = (mu[static_cast<std::size_t>(i)] -
                             md[static_cast<std::size_t>(i)]) /
                            (2.0 * h);
          fj_scale = std::max(fj_scale, std::abs(fd));
          fj_diff = std::max(
              fj_diff,
              std::abs(fisher[static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(j)] -
                       fd));
        }
      }
      fisher_err = std::max(fisher_err, fj_diff / std::max(fj_scale, 1e-9));

      Eigen::MatrixXd g(k, k);
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          g(i, j) = fisher[static_cast<std::size_t>(i)]
                          [static_cast<std::size_t>(j)];
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }
  return {mean_err <= 1e-5 && fisher_err <= 1e-4 && min_eig > 0.0,
          "mean_rel_err=" + fmt(mean_err) + " fisher_rel_err=" +
              fmt(fisher_err) + " min_fisher_eig=" + fmt(min_eig)};
}

// --- criterion 5: marginal constraint across orders ------------------------

Outcome marginal_constraint() {
  std::mt19937_64 gen(505);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    const int m = 2 + t;
    const auto h =
        testsupport::random_table(gen, static_cast<std::size_t>(m) * m, -1.0,
                                  1.0);
    const auto r = testsupport::random_marginal(gen, m);
    const auto res = construct(spec_for(m, 1, h, r, 1e-10));
    err = std::max(
        err, testsupport::max_abs_diff(stationary_marginal(res), r));
  }
  {
    const auto res = construct(spec_for(6, 2, inar2_dependence(6, 0.6, -0.3),
                                        binomial_marginal(5, 0.4), 1e-9));
    err = std::max(err, testsupport::max_abs_diff(stationary_marginal(res),
                                                  res.marginal));
  }
  {
    const auto h = testsupport::random_table(gen, 27, -1.0, 1.0);
    const auto r = testsupport::random_marginal(gen, 3);
    const auto res = construct(spec_for(3, 2, h, r, 1e-10));
    err = std::max(err, testsupport::max_abs_diff(stationary_marginal(res), r));
  }
  return {err <= 1e-8, "max_marginal_err=" + fmt(err) +
                           " tol=1e-8 (first order m=2..6, and d=2 with "
                           "m=6, m=3)"};
}

// --- criterion 6: negative-correlation count chain -------------------------

Outcome count_chain_acf() {
  const auto res = construct(spec_for(6, 1, inar1_dependence(6, -1.0),
                                      binomial_marginal(5, 0.4), 1e-9));
  const auto acf = exact_acf(res, 4);
  const auto pacf = exact_pacf(acf);
  const bool lag1_negative = acf[1] < 0.0;
  double tail = 0.0;
  for (int k = 2; k <= 4; ++k) {
    tail = std::max(tail, std::abs(pacf[static_cast<std::size_t>(k - 1)]));
  }

  int negative = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const TimeSeries ts = sample_path(res, 365, seed);
    if (sample_acf(ts, 1)[1] < 0.0) ++negative;
  }
  return {lag1_negative && tail <= 0.05 && negative >= 95,
          "exact_acf1=" + fmt(acf[1]) + " max|pacf(2..4)|=" + fmt(tail) +
              " negative_sample_acf1=" + std::to_string(negative) + "/100"};
}

// --- criterion 7: second-order chain and the sign of the lag-2 partial -----

Outcome second_order_pacf() {
  const auto res = construct(spec_for(6, 2, inar2_dependence(6, 0.6, -0.3),
                                      binomial_marginal(5, 0.4), 1e-9));
  const auto pacf = exact_pacf(exact_acf(res, 4));
  const auto flipped = construct(spec_for(6, 2, inar2_dependence(6, 0.6, 0.3),
                                          binomial_marginal(5, 0.4), 1e-9));
  const auto pacf_flipped = exact_pacf(exact_acf(flipped, 4));
  return {pacf[0] > 0.0 && pacf[1] < 0.0 && pacf_flipped[1] > 0.0,
          "pacf1=" + fmt(pacf[0]) + " pacf2=" + fmt(pacf[1]) +
              " pacf2_flipped=" + fmt(pacf_flipped[1])};
}

// --- criterion 8: normalized path divergence approaches the rate -----------

Outcome path_divergence_limit() {
  std::mt19937_64 gen(808);
  double worst_gap12 = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 5; ++trial) {
    const Kernel v = random_positive_kernel(3, gen);
    const Kernel w = random_positive_kernel(3, gen);
    const double rate = divergence_rate(v, w);
    double prev = 1e300;
    for (int n : {4, 8, 12}) {
      const double gap = std::abs(path_kl_rate(v, w, n) - rate);
      monotone = monotone && gap < prev;
      prev = gap;
      if (n == 12) worst_gap12 = std::max(worst_gap12, gap);
    }
  }
  return {worst_gap12 <= 0.02 && monotone,
          "max_gap_at_n12=" + fmt(worst_gap12) + " tol=0.02 monotone=" +
              (monotone ? "yes" : "no")};
}

// --- criterion 9: estimation round trip ------------------------------------

Outcome estimation_round_trip() {
  const auto truth = construct(spec_for(6, 1, inar1_dependence(6, -1.0),
                                        binomial_marginal(5, 0.4), 1e-10));
  const ParametricModel model{StateSpace::integer_range(6), 1, zeros(36),
                              {inar1_dependence(6, 1.0)}};
  int in_range = 0;
  double moment_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const TimeSeries ts = sample_path(truth, 10000, seed);
    const FitResult res = fit(model, ts);
    if (res.theta[0] >= -1.15 && res.theta[0] <= -0.85) ++in_range;
    moment_err = std::max(moment_err,
                          std::abs(fitted_mean(res, model.basis[0]) -
                                   res.moment_targets[0]));
    moment_err = std::max(moment_err,
                          testsupport::max_abs_diff(fitted_marginal(res),
                                                    res.window_marginal));
  }
  return {in_range >= 90 && moment_err <= 1e-8,
          "theta_in_[-1.15,-0.85]=" + std::to_string(in_range) +
              "/100 moment_err=" + fmt(moment_err)};
}

// --- criterion 10: byte-identical construct + sample through the CLI -------

Outcome cli_determinism() {
  testsupport::TempDir dir("acceptance-determinism");
  testsupport::write_file(dir.file("spec.json"), R"({
    "N": 5,
    "order": 1,
    "H": {"type": "inar1", "alpha": -1.0},
    "marginal": {"type": "binomial", "N": 5, "nu": 0.4},
    "tol": 1e-10,
    "seed": 2026
  })");
  const std::string spec = dir.file("spec.json").string();
  std::string result[2], series[2];
  for (int run = 0; run < 2; ++run) {
    const auto out = dir.file("out" + std::to_string(run) + ".json");
    const auto csv = dir.file("series" + std::to_string(run) + ".csv");
    if (testsupport::run_cli("construct --spec " + spec + " --out " +
                                 out.string(),
                             dir)
            .exit_code != 0) {
      return {false, "construct run " + std::to_string(run) + " failed"};
    }
    if (testsupport::run_cli("sample --spec " + out.string() +
                                 " --n 365 --out " + csv.string(),
                             dir)
            .exit_code != 0) {
      return {false, "sample run " + std::to_string(run) + " failed"};
    }
    result[run] = testsupport::read_file(out);
    series[run] = testsupport::read_file(csv);
  }
  const bool same =
      result[0] == result[1] && series[0] == series[1] && !result[0].empty();
  return {same, std::string("construct_bytes_equal=") +
                    (result[0] == result[1] ? "yes" : "no") +
                    " sample_bytes_equal=" +
                    (series[0] == series[1] ? "yes" : "no")};
}

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"independence reduction", 1.0, independence_reduction},
      {"pair law matches matrix scaling", 10.0, scaling_agreement},
      {"divergence split residual", 10.0, divergence_split},
      {"potential derivative fidelity", 5.0, derivative_fidelity},
      {"stationary marginal constraint", 5.0, marginal_constraint},
      {"negatively correlated count chain", 30.0, count_chain_acf},
      {"second-order partial autocorrelation signs", 60.0, second_order_pacf},
      {"path divergence approaches the rate", 10.0, path_divergence_limit},
      {"estimation round trip", 120.0, estimation_round_trip},
      {"deterministic construct and sample", 5.0, cli_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool pass = outcome.pass && elapsed < c.budget_seconds;
    if (!pass) ++failures;
    std::printf("%s  %2zu  %-45s %s  [%.2fs < %.0fs]\n",
                pass ? "PASS" : "FAIL", i + 1, c.name.c_str(),
                outcome.detail.c_str(), elapsed, c.budget_seconds);
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failures,
                criteria.size());
  }
  return failures;
}
