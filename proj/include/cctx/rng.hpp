#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cctx {

// Deterministic RNG with a portable draw sequence. std::mt19937_64 supplies
// bits; uniform/below avoid std distributions, whose sequences vary across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased draw in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= lim);
    return r % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  std::string save_state() const;
  void load_state(const std::string& s);

 private:
  std::mt19937_64 eng_;
};

// splitmix64 finalizer, for deriving independent stream seeds from
// (seed, step, slot) style keys.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace cctx
