#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "minmarkov/mininfo.hpp"
#include "minmarkov/statespace.hpp"

namespace minmarkov {

// A simulated path of state codes, with the seed that produced it.
struct TimeSeries {
  StateSpace base;
  std::vector<int> values;
  std::uint64_t seed = 0;
};

// Stationary path of length n from a constructed kernel: the first d states
// are one draw from the d-block stationary law, each later state one draw
// from the kernel row.  Bit-identical for identical (result, n, seed).
TimeSeries sample_path(const MinInfoResult& result, int n,
                       std::uint64_t seed);

// Sample autocorrelations with the biased 1/n normalization, lags
// 0..max_lag (acf[0] = 1); requires n > max_lag and nonconstant data.
std::vector<double> sample_acf(std::span<const int> series, int max_lag);
std::vector<double> sample_acf(const TimeSeries& ts, int max_lag);

// Sample partial autocorrelations: Levinson-Durbin on the sample ACF.
std::vector<double> sample_pacf(std::span<const int> series, int max_lag);
std::vector<double> sample_pacf(const TimeSeries& ts, int max_lag);

// State frequencies over codes 0..m-1.
std::vector<double> empirical_marginal(std::span<const int> series, int m);
std::vector<double> empirical_marginal(const TimeSeries& ts);

}  // namespace minmarkov
