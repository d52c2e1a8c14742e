#ifndef CVARVI_RNG_HPP
#define CVARVI_RNG_HPP

#include <cstdint>
#include <random>

namespace cvarvi {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Child stream `index` of `seed`:
//   derive_seed(seed, index) = mix64(seed + (index + 1) * 0x9E3779B97F4A7C15)
// The harness derives replication seeds this way from the base seed, and the
// solvers derive one stream per iteration from the run seed, so sample draws
// at iteration k do not depend on how many samples earlier iterations used.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

// mt19937_64 with a fixed 53-bit conversion to doubles, so streams are
// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cvarvi

#endif
