#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace survcart {

/// Philox4x32-10 counter-based generator. The 64-bit seed is the key; the
/// upper half of the 128-bit counter selects an independent substream, so
/// replicate r of an experiment uses stream r and depends only on (seed, r).
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr const char* name = "philox4x32-10";

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (buffered_ == 0) {
      const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
      out_ = bijection(ctr, key_);
      ++block_;
      buffered_ = 2;
    }
    const std::size_t k = 2 - buffered_--;
    return static_cast<std::uint64_t>(out_[2 * k]) |
           (static_cast<std::uint64_t>(out_[2 * k + 1]) << 32);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Exponential by inversion; 1 - U lies in (0, 1].
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Uniform integer in [0, n) by rejection; n >= 1.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  /// One keyed Philox4x32-10 block.
  static Block bijection(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block out_{};
  std::size_t buffered_ = 0;
};

}  // namespace survcart
