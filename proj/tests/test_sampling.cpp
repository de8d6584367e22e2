#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "minmarkov/diagnostics.hpp"
#include "minmarkov/errors.hpp"
#include "minmarkov/mininfo.hpp"
#include "minmarkov/random.hpp"
#include "minmarkov/sampling.hpp"
#include "minmarkov/statespace.hpp"
#include "test_support.hpp"

using namespace minmarkov;

namespace {

MinInfoResult memoryless_result(int m, const std::vector<double>& r) {
  return construct(MinInfoSpec{
      StateSpace::integer_range(m), 1,
      std::vector<double>(static_cast<std::size_t>(m) * m, 0.0), r, 1e-11});
}

MinInfoResult count_series_result() {
  return construct(MinInfoSpec{StateSpace::integer_range(6), 1,
                               inar1_dependence(6, -1.0),
                               binomial_marginal(5, 0.4), 1e-10});
}

double total_variation(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] - b[i]);
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("paths are bit-identical in the seed and differ across seeds") {
  const MinInfoResult res = count_series_result();
  const TimeSeries a = sample_path(res, 500, 42);
  const TimeSeries b = sample_path(res, 500, 42);
  const TimeSeries c = sample_path(res, 500, 43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.seed == 42);
  CHECK(a.base.size() == 6);
  CHECK(a.values.size() == 500);
  for (int v : a.values) {
    CHECK(v >= 0);
    CHECK(v < 6);
  }
}

TEST_CASE("a path of exactly the order is one stationary block draw") {
  const int m = 3;
  std::mt19937_64 gen(59);
  const std::vector<double> r = testsupport::random_marginal(gen, m);
  std::vector<double> h2(27, 0.0);
  h2[26] = 0.8;
  const MinInfoResult res = construct(
      MinInfoSpec{StateSpace::integer_range(m), 2, h2, r, 1e-9});

  const TimeSeries ts = sample_path(res, 2, 7);
  REQUIRE(ts.values.size() == 2);
  // The documented sampling scheme: one inverse-CDF draw from the block law.
  std::mt19937_64 replay(7);
  const int u = sample_categorical(res.stationary_d, replay);
  CHECK(ts.values == res.lifted.decode(u));

  CHECK_THROWS_AS(sample_path(res, 1, 7), InputError);
}

TEST_CASE("memoryless paths reproduce their marginal at modest lengths") {
  std::mt19937_64 gen(61);
  const std::vector<double> r = testsupport::random_marginal(gen, 4);
  const MinInfoResult res = memoryless_result(4, r);
  const TimeSeries ts = sample_path(res, 10000, 2026);
  CHECK(total_variation(empirical_marginal(ts), r) <= 0.02);
}

TEST_CASE("dependent paths still hit the constrained marginal") {
  const MinInfoResult res = count_series_result();
  const TimeSeries ts = sample_path(res, 100000, 9);
  CHECK(total_variation(empirical_marginal(ts), res.marginal) <= 0.02);

  // Transition-pair frequencies approach the stationary pair law.
  std::vector<double> pair_freq(36, 0.0);
  for (std::size_t t = 0; t + 1 < ts.values.size(); ++t) {
    pair_freq[static_cast<std::size_t>(ts.values[t]) * 6 +
              static_cast<std::size_t>(ts.values[t + 1])] += 1.0;
  }
  for (double& f : pair_freq) {
    f /= static_cast<double>(ts.values.size() - 1);
  }
  for (int x = 0; x < 6; ++x) {
    for (int y = 0; y < 6; ++y) {
      const double expected =
          res.stationary_d[x] * res.kernel[static_cast<std::size_t>(x) * 6 + y];
      CHECK(std::abs(pair_freq[static_cast<std::size_t>(x) * 6 + y] -
                     expected) <= 0.01);
    }
  }
}

TEST_CASE("sampled autocorrelation tracks the exact one at long lengths") {
  const MinInfoResult res = count_series_result();
  const std::vector<double> exact = exact_acf(res, 3);
  CHECK(exact[1] < 0.0);  // the negative-dependence design point
  const TimeSeries ts = sample_path(res, 100000, 11);
  const std::vector<double> sampled = sample_acf(ts, 3);
  for (int lag = 1; lag <= 3; ++lag) {
    CHECK(std::abs(sampled[static_cast<std::size_t>(lag)] -
                   exact[static_cast<std::size_t>(lag)]) <= 0.02);
  }
  const std::vector<double> pacf = sample_pacf(ts, 3);
  CHECK(pacf[0] == doctest::Approx(sampled[1]).epsilon(1e-12));
}

TEST_CASE("independent draws stay inside the white-noise band") {
  std::mt19937_64 gen(67);
  const std::vector<double> r = testsupport::random_marginal(gen, 3);
  const MinInfoResult res = memoryless_result(3, r);
  const int n = 2000;
  const double band = 3.0 / std::sqrt(static_cast<double>(n));
  int inside = 0, total = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const std::vector<double> acf = sample_acf(sample_path(res, n, seed), 5);
    for (int lag = 1; lag <= 5; ++lag) {
      ++total;
      if (std::abs(acf[static_cast<std::size_t>(lag)]) <= band) ++inside;
    }
  }
  CHECK(total == 100);
  CHECK(inside >= 90);
}

TEST_CASE("sample autocorrelation matches a hand computation") {
  // Alternating 0,1 of length 6: mean 1/2, variance 3/2, lag-1 covariance
  // 5 * (-1/4).
  const std::vector<int> series{0, 1, 0, 1, 0, 1};
  const std::vector<double> acf = sample_acf(series, 2);
  CHECK(acf[0] == 1.0);
  CHECK(acf[1] == doctest::Approx(-5.0 / 6.0).epsilon(1e-15));
  CHECK(acf[2] == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("degenerate series and bad lags are rejected") {
  const std::vector<int> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(sample_acf(flat, 2), InputError);
  const std::vector<int> ok{0, 1, 2, 1};
  CHECK_THROWS_AS(sample_acf(ok, 4), InputError);
  CHECK_THROWS_AS(sample_acf(ok, -1), InputError);
}

TEST_CASE("empirical marginal counts states and validates its input") {
  const std::vector<int> series{1, 1, 1};
  const std::vector<double> freq = empirical_marginal(series, 3);
  CHECK(freq == std::vector<double>{0.0, 1.0, 0.0});

  const std::vector<double> mixed =
      empirical_marginal(std::vector<int>{0, 1, 1, 2}, 4);
  CHECK(mixed == std::vector<double>{0.25, 0.5, 0.25, 0.0});

  CHECK_THROWS_AS(empirical_marginal(std::vector<int>{}, 3), InputError);
  CHECK_THROWS_AS(empirical_marginal(series, 0), InputError);
  CHECK_THROWS_AS(empirical_marginal(std::vector<int>{0, 3}, 3), InputError);
  CHECK_THROWS_AS(empirical_marginal(std::vector<int>{-1, 0}, 3), InputError);
}
