#ifndef HPILN_RNG_HPP_
#define HPILN_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace hpiln {

// Seedable random source. The engine is std::mt19937_64 (bit-exact across
// platforms by the standard); the distributions are implemented here because
// the standard library ones are implementation-defined and would break
// cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, bias-free.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (two uniforms per draw, no cached state).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from {0, ..., n-1}, uniform over k-subsets, in the
  // order they were drawn.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  // Derives a child seed from a root seed and a stage label, so one root seed
  // reproduces a whole pipeline while stages stay decorrelated.
  static std::uint64_t derive(std::uint64_t root, std::string_view label);

 private:
  std::mt19937_64 engine_;
};

}  // namespace hpiln

#endif  // HPILN_RNG_HPP_
