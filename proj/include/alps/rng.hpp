#pragma once

// Counter-based splittable RNG (Philox4x32-10). Every operation in the
// toolkit takes an explicit stream; split() derives provably distinct
// child streams so parallel chains never share randomness.

#include <array>
#include <cmath>
#include <cstdint>

#include "alps/common.hpp"

namespace alps {

namespace detail {

inline void philox_round(std::array<uint32_t, 4>& ctr, std::array<uint32_t, 2>& key) {
  constexpr uint64_t kMul0 = 0xD2511F53, kMul1 = 0xCD9E8D57;
  const uint64_t p0 = kMul0 * uint64_t(ctr[0]);
  const uint64_t p1 = kMul1 * uint64_t(ctr[2]);
  const uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
  const uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  key[0] += 0x9E3779B9;  // golden ratio
  key[1] += 0xBB67AE85;  // sqrt(3)-1
}

inline std::array<uint32_t, 4> philox10(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) philox_round(ctr, key);
  return ctr;
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) : key_{seed}, stream_{stream} {}

  // Child stream c is the Philox image of (stream, c) under the current key:
  // distinct (key, stream) pairs index disjoint counter spaces.
  Rng split(uint64_t child) const {
    auto block = detail::philox10(
        {uint32_t(stream_), uint32_t(stream_ >> 32), uint32_t(child), uint32_t(child >> 32)},
        {uint32_t(key_), uint32_t(key_ >> 32)});
    uint64_t k = (uint64_t(block[0]) << 32) | block[1];
    uint64_t s = (uint64_t(block[2]) << 32) | block[3];
    return Rng(k, s);
  }

  uint64_t operator()() {  // next 64 uniform bits
    if (idx_ >= 4) refill();
    uint64_t lo = block_[idx_], hi = block_[idx_ + 1];
    idx_ += 2;
    return (hi << 32) | lo;
  }

  // Uniform in (0, 1]; never 0 so log() is safe.
  double uniform() { return (double((*this)() >> 11) + 1.0) * 0x1p-53; }

  // Standard normal via Box-Muller; one spare cached per pair.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1)), a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::cos(a);
    have_spare_ = true;
    return r * std::sin(a);
  }

  Vec gaussian_vector(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  void gaussian_fill(Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gaussian();
  }

  uint64_t seed() const { return key_; }
  uint64_t stream() const { return stream_; }

 private:
  void refill() {
    auto out = detail::philox10(
        {uint32_t(counter_), uint32_t(counter_ >> 32), uint32_t(stream_), uint32_t(stream_ >> 32)},
        {uint32_t(key_), uint32_t(key_ >> 32)});
    for (int i = 0; i < 4; ++i) block_[i] = out[i];
    ++counter_;
    idx_ = 0;
  }

  uint64_t key_;
  uint64_t stream_;
  uint64_t counter_ = 0;
  std::array<uint64_t, 4> block_{};
  int idx_ = 4;
  double spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace alps
