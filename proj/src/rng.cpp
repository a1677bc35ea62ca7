#include "mclab/rng.hpp"

#include <cmath>

namespace mclab {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

// 53-bit uniform in (0,1) from two 32-bit words.
inline double to_unit(uint32_t hi, uint32_t lo) {
  uint64_t bits = (static_cast<uint64_t>(hi) << 21) ^ (lo >> 11);
  return (static_cast<double>(bits & ((1ull << 53) - 1)) + 0.5) /
         9007199254740992.0;  // 2^53
}

}  // namespace

std::array<uint32_t, 4> Rng::philox4x32(std::array<uint32_t, 4> ctr,
                                        std::array<uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::array<uint32_t, 4> Rng::block(uint64_t particle, uint64_t step,
                                   RngChannel channel, uint32_t index) const {
  std::array<uint32_t, 4> ctr = {
      static_cast<uint32_t>(particle), static_cast<uint32_t>(particle >> 32),
      static_cast<uint32_t>(step),
      (static_cast<uint32_t>(step >> 32) << 8) ^ index};
  std::array<uint32_t, 2> key = {
      static_cast<uint32_t>(seed_) ^
          (static_cast<uint32_t>(channel) * 0x85EBCA6Bu),
      static_cast<uint32_t>(seed_ >> 32) + static_cast<uint32_t>(channel)};
  return philox4x32(ctr, key);
}

double Rng::uniform(uint64_t particle, uint64_t step, RngChannel channel,
                    uint32_t index) const {
  auto r = block(particle, step, channel, index);
  return to_unit(r[0], r[1]);
}

double Rng::normal(uint64_t particle, uint64_t step, RngChannel channel,
                   uint32_t index) const {
  auto r = block(particle, step, channel, index);
  double u1 = to_unit(r[0], r[1]);
  double u2 = to_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace mclab
