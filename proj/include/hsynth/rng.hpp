#pragma once

#include <cstdint>
#include <iterator>
#include <random>

namespace hsynth {

/// Portable random source: mt19937_64 plus draws defined here rather than by
/// the standard distributions, whose output differs between library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  bool chance(double p) { return unit() < p; }

  template <typename Seq>
  const auto& pick(const Seq& seq) {
    return seq[index(std::size(seq))];
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; combines a run seed with coordinates into a child seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t round, std::uint64_t index) {
  return mix_seed(mix_seed(run_seed, round), index);
}

}  // namespace hsynth
