#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, index), so replication r of a simulation reads the same
// numbers no matter which worker thread runs it.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bcmoments {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Random-access view of one stream: bits(i) / uniform(i) depend only on
/// (seed, stream, i). 2^64 streams of 2^64 draws each.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = Philox4x32::generate(ctr, key_);
    return (std::uint64_t{out[0]} << 32) | out[1];
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform(std::uint64_t index) const noexcept {
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t stream() const noexcept { return stream_; }

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
};

/// Sequential cursor over a CounterStream with Gaussian draws (Box–Muller,
/// both variates used).
class StreamCursor {
 public:
  StreamCursor(std::uint64_t seed, std::uint64_t stream, std::uint64_t start = 0) noexcept
      : stream_(seed, stream), next_(start) {}
  explicit StreamCursor(const CounterStream& stream, std::uint64_t start = 0) noexcept
      : stream_(stream), next_(start) {}

  double uniform() noexcept { return stream_.uniform(next_++); }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t position() const noexcept { return next_; }

 private:
  CounterStream stream_;
  std::uint64_t next_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bcmoments
