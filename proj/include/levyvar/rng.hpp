#pragma once

// Counter-based random streams. A stream is addressed by
// (experiment seed, replica index, component tag) and draws are a pure
// function of that address and the draw index, so replicas can be generated
// in any order on any number of threads with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace levyvar {

/// Philox4x32-10 (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Component tags. The low 16 bits are free for a sub-stream index (e.g. the
/// refinement level of a Brownian bridge).
enum class StreamTag : std::uint32_t {
  Gaussian = 1u << 16,
  SmallJumps = 2u << 16,
  JumpTimes = 3u << 16,
  JumpSizes = 4u << 16,
  Bridge = 5u << 16,
  SmallJumpBridge = 6u << 16,
  Centering = 7u << 16,
  Scenario = 8u << 16,
};

struct StreamAddress {
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  std::uint32_t tag = 0;
};

inline StreamAddress address(std::uint64_t seed, std::uint32_t replica, StreamTag tag, std::uint32_t sub = 0) {
  return {seed, replica, static_cast<std::uint32_t>(tag) | (sub & 0xFFFFu)};
}

class RandomStream {
 public:
  explicit RandomStream(StreamAddress addr) : addr_(addr) {}

  [[nodiscard]] const StreamAddress& address() const { return addr_; }
  [[nodiscard]] std::uint64_t blocks_used() const { return block_; }

  std::uint64_t next_u64() {
    if (pos_ == 2) refill();
    return buffer_[pos_++];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  addr_.replica, addr_.tag};
    const Philox4x32::Key key{static_cast<std::uint32_t>(addr_.seed), static_cast<std::uint32_t>(addr_.seed >> 32)};
    const auto out = Philox4x32::generate(ctr, key);
    buffer_[0] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    buffer_[1] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    ++block_;
    pos_ = 0;
  }

  StreamAddress addr_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int pos_ = 2;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer, used to derive child seeds (e.g. per experiment).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace levyvar
