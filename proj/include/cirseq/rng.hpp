#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cirseq {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit key selects an independent stream; the 128-bit counter is split
/// into a 64-bit block index and a 64-bit substream id. Satisfies
/// UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t substream)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ >= 2) {
      buffer_ = bijection(counter_block(block_++), key_);
      used_ = 0;
    }
    const std::uint64_t lo = buffer_[2 * used_];
    const std::uint64_t hi = buffer_[2 * used_ + 1];
    ++used_;
    return (hi << 32) | lo;
  }

  /// Position in the stream, in 64-bit draws. Used by tests only.
  std::uint64_t draws() const { return block_ * 2 - (2 - used_); }

  /// The keyed Philox4x32-10 bijection on one 128-bit block.
  static Block bijection(Block ctr, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = Block{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                  static_cast<std::uint32_t>(p1),
                  static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                  static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  Block counter_block(std::uint64_t block) const {
    return Block{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                 static_cast<std::uint32_t>(substream_),
                 static_cast<std::uint32_t>(substream_ >> 32)};
  }

  Key key_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 2;
};

using Rng = Philox4x32;

/// Independent stream for one Monte Carlo replicate. Results never depend on
/// which thread consumes the stream.
inline Rng replicate_stream(std::uint64_t master_seed, std::uint64_t replicate) {
  return Rng(master_seed, replicate);
}

}  // namespace cirseq
