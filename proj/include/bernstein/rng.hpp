#pragma once

#include <cstdint>
#include <random>

namespace bernstein {

/// SplitMix64 finalizer; decorrelates nearby (seed, stream) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Random stream owned by one path. The stream is a pure function of
/// (seed, path_id, purpose), so serial and threaded runs draw the same numbers.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t path_id, std::uint64_t purpose = 0)
      : engine_(mix64(seed ^ mix64(path_id ^ mix64(purpose)))) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stream tags keep independent uses of one (seed, path) pair apart.
namespace stream {
inline constexpr std::uint64_t endpoints = 1;
inline constexpr std::uint64_t path = 2;
inline constexpr std::uint64_t kernel = 3;
inline constexpr std::uint64_t start = 4;
inline constexpr std::uint64_t fk_u = 5;
inline constexpr std::uint64_t fk_v = 6;
}  // namespace stream

}  // namespace bernstein
