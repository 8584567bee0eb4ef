#pragma once

#include <cstdint>
#include <random>

namespace memsim {

// Seedable 64-bit generator. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; derived values are computed here
// rather than through <random> distributions so that streams are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Modulo bias is below 2^-40 for the
  // bounds used in this project.
  std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace memsim
