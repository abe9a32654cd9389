// Deterministic random streams.
//
// Every stochastic component (phantom sampling, acquisition noise,
// exploration, weight init, replay sampling) draws from its own stream,
// derived from a master seed. Distribution sampling is implemented here
// rather than with std::uniform_*_distribution, whose output is
// implementation-defined; reproducibility of whole runs depends on these
// draws being stable.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace blochgame {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream; stable w.r.t. the parent's draw history.
  Rng child(std::string_view tag, std::uint64_t salt = 0) const {
    std::uint64_t s = seed_ ^ hash_tag(tag) ^ (salt * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
  }

  // Box-Muller, one value per call (no cached pair)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace blochgame
