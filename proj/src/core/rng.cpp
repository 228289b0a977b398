#include "uwir/core/rng.hpp"

namespace uwir {

Rng& global_rng() {
  static Rng rng(0);
  return rng;
}

void seed_all(std::uint64_t seed) { global_rng() = Rng(seed); }

}  // namespace uwir
