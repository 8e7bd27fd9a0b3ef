#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace minigt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view s) {
  // FNV-1a, then scrambled so short tags differ in all bits.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t v) {
  return splitmix64(seed ^ splitmix64(v));
}

// Derives an independent stream seed from a base seed plus tags/indices.
// Deterministic and stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t seed) { return splitmix64(seed); }

template <class T, class... Rest>
std::uint64_t derive_seed(std::uint64_t seed, T first, Rest... rest) {
  std::uint64_t v;
  if constexpr (std::is_convertible_v<T, std::string_view>) {
    v = hash_tag(std::string_view(first));
  } else {
    v = static_cast<std::uint64_t>(first);
  }
  return derive_seed(mix_seed(seed, v), rest...);
}

// mt19937_64 is fully specified by the standard; the distributions below are
// written out so streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool coin() { return (gen_() >> 63) != 0; }

  // Standard normal via Box-Muller; one spare cached per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// k distinct elements of pool, uniformly, by partial Fisher-Yates.
// Returns the whole pool when k >= pool.size().
template <class Int>
std::vector<Int> sample_without_replacement(Rng& rng, std::span<const Int> pool, std::size_t k) {
  std::vector<Int> buf(pool.begin(), pool.end());
  if (k >= buf.size()) return buf;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(buf.size() - i));
    std::swap(buf[i], buf[j]);
  }
  buf.resize(k);
  return buf;
}

}
