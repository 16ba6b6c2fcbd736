#pragma once
// Deterministic counter-based random streams.
//
// A Philox4x32-10 block function drives every stream. A stream is identified by
// (name, seed, substream): the key mixes the operation name with the seed, and the
// 128-bit counter is split into a 64-bit substream id plus a 64-bit block position.
// Parallel workers draw from disjoint substreams without coordination, so results
// never depend on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace monolab {

namespace detail {

constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Philox4x32 with 10 rounds; matches the published known-answer vectors.
struct Philox4x32 {
  static std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr,
                                       std::array<uint32_t, 2> key) {
    constexpr uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
    constexpr uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
      const uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<uint32_t>(p1),
             static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<uint32_t>(p0)};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }
};

class RandomStream {
 public:
  RandomStream(std::string_view name, uint64_t seed, uint64_t substream = 0)
      : hi_(substream) {
    const uint64_t k = detail::splitmix64(seed) ^ detail::fnv1a64(name);
    key_ = {static_cast<uint32_t>(k), static_cast<uint32_t>(k >> 32)};
  }

  uint32_t next_u32() {
    if (bufpos_ == 4) refill();
    return buf_[bufpos_++];
  }

  uint64_t next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return lo | (hi << 32);
  }

  // Uniform on [0,1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; the convention for active coordinates.
  double next_open_closed() { return 1.0 - next_double(); }

  // Standard normal via Box-Muller; the spare of each pair is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_open_closed()));
    const double t = 2.0 * 3.14159265358979323846 * next_double();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Unbiased uniform draw from {0, ..., n-1} by rejection.
  uint64_t next_below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  void refill() {
    buf_ = Philox4x32::block({static_cast<uint32_t>(lo_),
                              static_cast<uint32_t>(lo_ >> 32),
                              static_cast<uint32_t>(hi_),
                              static_cast<uint32_t>(hi_ >> 32)},
                             key_);
    ++lo_;
    bufpos_ = 0;
  }

  std::array<uint32_t, 2> key_{};
  uint64_t hi_ = 0;  // substream id
  uint64_t lo_ = 0;  // block position within the substream
  std::array<uint32_t, 4> buf_{};
  int bufpos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace monolab
