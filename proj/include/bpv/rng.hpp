#pragma once

#include <cstdint>
#include <random>

namespace bpv {

// Deterministic random source. std::mt19937_64 output is fixed by the
// standard; the distributions here are hand-rolled because the standard
// library distribution objects are implementation-defined and would break
// reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, bound). Modulo bias is irrelevant at the bounds
  // used here (all far below 2^32).
  std::size_t uniform_index(std::size_t bound) {
    return static_cast<std::size_t>(gen_() % bound);
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Standard normal via Box-Muller; the paired value is cached.
  double normal();

 private:
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Mixes a base seed with a stream index so parallel streams never overlap.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bpv
