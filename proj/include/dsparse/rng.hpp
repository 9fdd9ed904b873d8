#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dsparse {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (master, a, b, c).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ splitmix64(a + 1));
  s = splitmix64(s ^ splitmix64(b + 0x51ed2701ULL));
  s = splitmix64(s ^ splitmix64(c + 0x2545f491ULL));
  return s;
}

// mt19937_64 with platform-independent derived distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform() < p;
  }

  // Number of failures before the first success, success probability p in (0, 1).
  std::uint64_t geometric(double p) {
    double u = 1.0 - uniform();
    double g = std::floor(std::log(u) / std::log1p(-p));
    if (!(g < 9.0e18)) return ~std::uint64_t{0} >> 1;
    return static_cast<std::uint64_t>(g);
  }

  template <class It>
  void shuffle(It first, It last) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = static_cast<decltype(i)>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(first[i], first[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace dsparse
