#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lfmgan {

// Deterministic random source. mt19937_64 has a standard-specified sequence,
// so the same seed yields the same stream on every platform; the derived
// draws below avoid std::*_distribution, whose algorithms are
// implementation-defined. normal() keeps no cached spare, so the serialized
// engine state fully captures the generator.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform_open() { return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; }

  // Standard normal via one Box-Muller branch: two engine words per draw.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n).
  int64_t uniform_int(int64_t n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    int64_t v = static_cast<int64_t>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  std::string serialize() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  static Rng deserialize(const std::string& state) {
    Rng r(0);
    std::istringstream is(state);
    is >> r.eng_;
    if (is.fail()) throw std::runtime_error("Rng::deserialize: malformed engine state");
    return r;
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.eng_ == b.eng_; }

 private:
  std::mt19937_64 eng_;
};

// Stable derivation of per-purpose seeds (evaluation streams, epoch shuffles)
// from a base seed, via splitmix64 steps.
inline uint64_t derive_seed(uint64_t base, uint64_t salt) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace lfmgan
