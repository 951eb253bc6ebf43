#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ttb {

// Deterministic 64-bit generator used everywhere randomness is needed.
// Algorithm: xoshiro256++ seeded through splitmix64. Streams derived with
// child() are independent of the parent's future draws, so episode workers
// can run in any order without changing results.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
  }

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Unbiased draw in [0, n). n must be > 0.
  uint64_t uniform_u64(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  int uniform_int(int n) { return static_cast<int>(uniform_u64(static_cast<uint64_t>(n))); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

  bool chance(double p) { return uniform_real() < p; }

  // Fisher-Yates, consumes n-1 draws.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_u64(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; tag picks the stream.
  Rng child(uint64_t tag) const { return Rng(derive(seed_, tag)); }

  static uint64_t derive(uint64_t seed, uint64_t tag) {
    uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
    return splitmix64(x);
  }

  // FNV-1a over a label, used for per-cell seeds in the evaluator.
  static uint64_t hash_label(std::string_view label) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
    return h;
  }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t seed_;
  uint64_t s_[4];
};

}  // namespace ttb
