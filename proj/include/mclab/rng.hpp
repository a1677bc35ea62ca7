#ifndef MCLAB_RNG_HPP
#define MCLAB_RNG_HPP

#include <array>
#include <cstdint>

namespace mclab {

// Counter-based generator (Philox4x32-10). Draws are a pure function of
// (seed, particle, step, channel, index), so trajectories are reproducible
// independently of thread count or evaluation order.
enum class RngChannel : uint32_t {
  init_x = 0,
  init_y = 1,
  brownian_b = 2,
  brownian_w = 3,
  scratch = 4,
};

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {}

  uint64_t seed() const { return seed_; }

  // Uniform on (0,1), open at both ends.
  double uniform(uint64_t particle, uint64_t step, RngChannel channel,
                 uint32_t index) const;

  // Standard normal deviate.
  double normal(uint64_t particle, uint64_t step, RngChannel channel,
                uint32_t index) const;

  static std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                            std::array<uint32_t, 2> key);

 private:
  std::array<uint32_t, 4> block(uint64_t particle, uint64_t step,
                                RngChannel channel, uint32_t index) const;
  uint64_t seed_;
};

}  // namespace mclab

#endif
