#pragma once
// Deterministic random source. mt19937_64 is bit-exact across standard
// libraries; normal draws go through an explicit Box-Muller transform because
// std::normal_distribution's algorithm is implementation defined. normal()
// consumes exactly two engine words per call and keeps no cached spare, so
// serializing the engine state captures the full generator state.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace uwir {

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }

  bool coin() { return (eng_() & 1u) != 0; }

  // Standard normal via Box-Muller; u1 is shifted into (0, 1] so the log is finite.
  double normal() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t raw() { return eng_(); }

  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

// Process-global generator used by paths that do not thread an Rng through.
Rng& global_rng();

// Reseeds the global generator; all subsequent draws from it are reproducible.
void seed_all(std::uint64_t seed);

}  // namespace uwir
