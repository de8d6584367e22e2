#include "minmarkov/sampling.hpp"

#include <cmath>
#include <random>
#include <string>

#include "minmarkov/diagnostics.hpp"
#include "minmarkov/errors.hpp"
#include "minmarkov/random.hpp"

namespace minmarkov {

TimeSeries sample_path(const MinInfoResult& result, int n,
                       std::uint64_t seed) {
  const int d = result.order;
  const int m = result.base.size();
  if (n < d) {
    throw InputError("need at least order = " + std::to_string(d) +
                     " samples, got n = " + std::to_string(n));
  }

  std::mt19937_64 gen(seed);
  TimeSeries ts{result.base, {}, seed};
  ts.values.reserve(static_cast<std::size_t>(n));

  int u = sample_categorical(result.stationary_d, gen);
  {
    const std::vector<int> block = result.lifted.decode(u);
    ts.values.assign(block.begin(), block.end());
  }

  const Digraph& g = *result.lifted.graph();
  for (int t = d; t < n; ++t) {
    const std::span<const double> row(
        result.kernel.data() + g.row_begin(u),
        static_cast<std::size_t>(m));
    const int y = sample_categorical(row, gen);
    ts.values.push_back(y);
    u = result.lifted.successor(u, y);
  }
  return ts;
}

std::vector<double> sample_acf(std::span<const int> series, int max_lag) {
  const auto n = series.size();
  if (max_lag < 0) throw InputError("max_lag must be nonnegative");
  if (n <= static_cast<std::size_t>(max_lag)) {
    throw InputError("series length must exceed max_lag");
  }
  double mean = 0.0;
  for (int v : series) mean += v;
  mean /= static_cast<double>(n);

  double var = 0.0;
  for (int v : series) {
    const double c = v - mean;
    var += c * c;
  }
  if (!(var > 0.0)) {
    throw InputError("series is constant; autocorrelation is undefined");
  }

  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 1.0);
  for (int lag = 1; lag <= max_lag; ++lag) {
    double cov = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) {
      cov += (series[t] - mean) * (series[t + lag] - mean);
    }
    acf[static_cast<std::size_t>(lag)] = cov / var;
  }
  return acf;
}

std::vector<double> sample_acf(const TimeSeries& ts, int max_lag) {
  return sample_acf(std::span<const int>(ts.values), max_lag);
}

std::vector<double> sample_pacf(std::span<const int> series, int max_lag) {
  return exact_pacf(sample_acf(series, max_lag));
}

std::vector<double> sample_pacf(const TimeSeries& ts, int max_lag) {
  return sample_pacf(std::span<const int>(ts.values), max_lag);
}

std::vector<double> empirical_marginal(std::span<const int> series, int m) {
  if (series.empty()) throw InputError("series is empty");
  if (m < 1) throw InputError("state count must be positive");
  std::vector<double> freq(static_cast<std::size_t>(m), 0.0);
  for (int v : series) {
    if (v < 0 || v >= m) {
      throw InputError("series value " + std::to_string(v) +
                       " outside 0.." + std::to_string(m - 1));
    }
    freq[static_cast<std::size_t>(v)] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(series.size());
  return freq;
}

std::vector<double> empirical_marginal(const TimeSeries& ts) {
  return empirical_marginal(std::span<const int>(ts.values),
                            ts.base.size());
}

}  // namespace minmarkov
