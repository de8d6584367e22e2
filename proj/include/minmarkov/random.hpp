#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace minmarkov {

// Uniform double in [0, 1) built from the top 53 bits of one mt19937_64
// draw.  std::uniform_real_distribution is not pinned down by the standard;
// this is, so seeded runs reproduce bit-for-bit across platforms.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw from `probs` in index order; returns the last index when
// rounding pushes the accumulated mass slightly below 1.
inline int sample_categorical(std::span<const double> probs,
                              std::mt19937_64& gen) {
  const double u = uniform01(gen);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace minmarkov
