#ifndef MOUSTACHE_RNG_HPP
#define MOUSTACHE_RNG_HPP

#include <cstdint>
#include <random>

namespace moustache {

/// SplitMix64 finalizer; used to turn (seed, task index) into a stream key.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

/**
 * One independent random stream.
 *
 * Every parallel task owns exactly one stream, derived from the global seed
 * and the task index, so results never depend on how tasks are scheduled
 * onto workers.
 */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index) { reseed(seed, index); }

  void reseed(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t key = stream_key(seed, index);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
    normal_.reset();
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double normal() { return normal_(engine_); }

  std::uint64_t bits() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
    return pick(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace moustache

#endif
