#include "minmarkov/expfam.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "minmarkov/errors.hpp"

namespace minmarkov {

struct ExpFamily::Data {
  std::shared_ptr<const Digraph> graph;
  std::vector<double> carrier;
  std::vector<std::vector<double>> statistics;
};

namespace {

// Numerical rank with threshold 1e-8 on singular values.  Jacobi SVD for
// small row counts, rank-revealing QR above that (same threshold).
Eigen::Index numerical_rank(const Eigen::MatrixXd& m) {
  constexpr double kThreshold = 1e-8;
  if (m.rows() <= 64) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > kThreshold) ++rank;
    }
    return rank;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(kThreshold);
  return qr.rank();
}

// The null functions kappa(y) - kappa(x) - c span the gauge directions that
// leave the kernel unchanged; statistics must add rank beyond them.
void check_independence(const Digraph& g,
                        const std::vector<std::vector<double>>& stats) {
  const auto k = static_cast<Eigen::Index>(stats.size());
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  const auto edges = static_cast<Eigen::Index>(g.edge_count());

  if ((k + n + 1) > 4096 || (k + n + 1) * edges > 50'000'000) {
    throw ResourceError(
        "family too large for the dense identifiability check; construct "
        "with IndependenceCheck::assume if independence is known");
  }

  Eigen::MatrixXd null_basis(n + 1, edges);
  for (int x = 0; x < g.vertex_count(); ++x) {
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      const int y = g.target(e);
      for (int i = 0; i < g.vertex_count(); ++i) {
        null_basis(i, static_cast<Eigen::Index>(e)) =
            (y == i ? 1.0 : 0.0) - (x == i ? 1.0 : 0.0);
      }
      null_basis(n, static_cast<Eigen::Index>(e)) = -1.0;
    }
  }
  const Eigen::Index null_rank = numerical_rank(null_basis);

  Eigen::MatrixXd stacked(k + n + 1, edges);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index e = 0; e < edges; ++e) {
      stacked(i, e) = stats[static_cast<std::size_t>(i)]
                           [static_cast<std::size_t>(e)];
    }
  }
  stacked.bottomRows(n + 1) = null_basis;

  if (numerical_rank(stacked) != k + null_rank) {
    throw InputError(
        "statistics are linearly dependent modulo the null functions "
        "kappa(y) - kappa(x) - c; the natural parameter would not be "
        "identifiable");
  }
}

}  // namespace

ExpFamily::ExpFamily(std::shared_ptr<const Digraph> graph,
                     std::vector<double> carrier,
                     std::vector<std::vector<double>> statistics,
                     IndependenceCheck check) {
  if (!graph) throw InputError("family has no support graph");
  if (!graph->strongly_connected()) {
    throw InputError("family support is not strongly connected");
  }
  if (carrier.size() != graph->edge_count()) {
    throw InputError("carrier has " + std::to_string(carrier.size()) +
                     " values for " + std::to_string(graph->edge_count()) +
                     " edges");
  }
  for (const auto& f : statistics) {
    if (f.size() != graph->edge_count()) {
      throw InputError("statistic table does not match the edge count");
    }
  }
  if (check == IndependenceCheck::verify) {
    check_independence(*graph, statistics);
  }

  auto data = std::make_shared<Data>();
  data->graph = std::move(graph);
  data->carrier = std::move(carrier);
  data->statistics = std::move(statistics);
  data_ = std::move(data);
}

int ExpFamily::dimension() const {
  return static_cast<int>(data_->statistics.size());
}
const Digraph& ExpFamily::graph() const { return *data_->graph; }
std::shared_ptr<const Digraph> ExpFamily::graph_ptr() const {
  return data_->graph;
}
const std::vector<double>& ExpFamily::carrier() const {
  return data_->carrier;
}
const std::vector<std::vector<double>>& ExpFamily::statistics() const {
  return data_->statistics;
}

ThetaPoint ExpFamily::at(std::span<const double> theta, double tol) const {
  if (static_cast<int>(theta.size()) != dimension()) {
    throw InputError("theta has length " + std::to_string(theta.size()) +
                     ", family dimension is " + std::to_string(dimension()));
  }
  const Digraph& g = *data_->graph;

  std::vector<double> score(g.edge_count());
  for (std::size_t e = 0; e < score.size(); ++e) {
    double s = data_->carrier[e];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      s += theta[k] * data_->statistics[k][e];
    }
    score[e] = s;
  }
  const double shift = *std::max_element(score.begin(), score.end());

  NonnegMatrix f{data_->graph, std::vector<double>(score.size())};
  for (std::size_t e = 0; e < score.size(); ++e) {
    f.values[e] = std::exp(score[e] - shift);
    if (!(f.values[e] > 0.0)) {
      throw InputError("carrier plus statistics span a range too wide for "
                       "double precision");
    }
  }

  ThetaPoint point{*this, std::vector<double>(theta.begin(), theta.end()),
                   perron::normalize_kernel(f, tol), 0.0};
  // Undo the score shift so the reported potential refers to the raw scores.
  point.solution.eigen.log_normalizer += shift;
  point.solution.eigen.spectral_radius =
      std::exp(point.solution.eigen.log_normalizer);
  point.potential = point.solution.eigen.log_normalizer;
  return point;
}

std::vector<double> mean_map(const ThetaPoint& point) {
  const auto& stats = point.family.statistics();
  std::vector<double> mean(stats.size(), 0.0);
  for (std::size_t k = 0; k < stats.size(); ++k) {
    double acc = 0.0;
    for (std::size_t e = 0; e < stats[k].size(); ++e) {
      acc += point.solution.pair[e] * stats[k][e];
    }
    mean[k] = acc;
  }
  return mean;
}

std::vector<std::vector<double>> fisher_information(const ThetaPoint& point) {
  const ExpFamily& family = point.family;
  const Digraph& g = family.graph();
  const int k = family.dimension();
  const int n = g.vertex_count();
  constexpr double kStep = 1e-5;

  auto gauged_kappa = [&](std::span<const double> theta) {
    ThetaPoint p = family.at(theta);
    std::vector<double> kappa = p.solution.eigen.log_right;
    const double last = kappa[static_cast<std::size_t>(n) - 1];
    for (double& v : kappa) v -= last;
    return kappa;
  };

  std::vector<std::vector<double>> dkappa(k);
  for (int j = 0; j < k; ++j) {
    std::vector<double> up(point.theta), down(point.theta);
    up[j] += kStep;
    down[j] -= kStep;
    const auto kappa_up = gauged_kappa(up);
    const auto kappa_down = gauged_kappa(down);
    dkappa[j].resize(n);
    for (int i = 0; i < n; ++i) {
      dkappa[j][i] = (kappa_up[i] - kappa_down[i]) / (2.0 * kStep);
    }
  }
  const std::vector<double> dpsi = mean_map(point);

  // Score of component j on edge (x, y):
  //   F_j + d kappa_j(y) - d kappa_j(x) - d psi_j.
  std::vector<std::vector<double>> scores(
      k, std::vector<double>(g.edge_count()));
  const auto& stats = family.statistics();
  for (int x = 0; x < n; ++x) {
    for (std::size_t e = g.row_begin(x); e < g.row_end(x); ++e) {
      const int y = g.target(e);
      for (int j = 0; j < k; ++j) {
        scores[j][e] = stats[j][e] + dkappa[j][y] - dkappa[j][x] - dpsi[j];
      }
    }
  }

  std::vector<std::vector<double>> fisher(k, std::vector<double>(k, 0.0));
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      double acc = 0.0;
      for (std::size_t e = 0; e < g.edge_count(); ++e) {
        acc += point.solution.pair[e] * scores[a][e] * scores[b][e];
      }
      fisher[a][b] = acc;
      fisher[b][a] = acc;
    }
  }
  return fisher;
}

}  // namespace minmarkov
