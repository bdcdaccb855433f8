#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace mfg {

// splitmix64; used to derive independent streams from (seed, stream id)
// so that work parallelised over agents/epochs stays bit-reproducible.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed, stream));
}

// Uniform double in [0,1). Hand-rolled instead of
// std::uniform_real_distribution, whose output is implementation-defined;
// file-level byte determinism relies on this being fixed.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from an explicit categorical distribution.
inline int sample_categorical(std::span<const double> probs,
                              std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // u landed in the rounding slack past the last cumulative sum
  for (int i = n - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  return n - 1;
}

}  // namespace mfg
