#pragma once

#include <cstdint>
#include <random>

namespace tackscan {

/// SplitMix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for sub-stream `stream` of a master seed.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(seed ^ mix_seed(stream + 0x51ed270b27a1c2d5ULL)));
}

}  // namespace tackscan
