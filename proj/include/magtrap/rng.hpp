#pragma once

// Portable seeded sampling. std::mt19937_64 has a fully specified output
// sequence; the distributions on top of it are written out here because the
// standard library distributions are implementation-defined.

#include <cstdint>
#include <random>

#include "magtrap/core.hpp"

namespace magtrap {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform direction on the unit sphere S^{D-1} by rejection from the cube.
  template <int D>
  Vec<D> direction() {
    for (;;) {
      Vec<D> u;
      for (int i = 0; i < D; ++i) u[i] = uniform(-1.0, 1.0);
      const double r2 = u.squaredNorm();
      if (r2 > 1e-4 && r2 <= 1.0) return u / std::sqrt(r2);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace magtrap
