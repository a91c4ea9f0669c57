#pragma once

#include <cstdint>
#include <random>

namespace dpm {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent per-task seeds from a
// root seed so that chunked and parallel runs stay reproducible.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix_seed(root ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Uniform double on [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace dpm
