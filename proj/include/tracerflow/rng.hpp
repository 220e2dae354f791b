// Copyright 2026 The tracerflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tracerflow {

/// What a random substream is used for. Part of the stream key so the
/// field draw and the Brownian increments of one particle never overlap.
enum class StreamPurpose : std::uint32_t { Field = 0, Noise = 1, Probe = 2 };

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key holds the master seed; the upper half of the 128-bit
/// counter holds (substream id, purpose) and the lower half is the block
/// index. Any (seed, substream, purpose) triple names an independent,
/// replayable stream, which is what makes ensemble output independent of
/// scheduling. Satisfies UniformRandomBitGenerator with 64-bit results.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t substream,
             StreamPurpose purpose = StreamPurpose::Field) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        substream_(static_cast<std::uint32_t>(substream)),
        purpose_(static_cast<std::uint32_t>(purpose) ^
                 (static_cast<std::uint32_t>(substream >> 32) << 8)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (used_ == 2) {
      refill();
    }
    const auto lo = static_cast<std::uint64_t>(block_[2 * used_]);
    const auto hi = static_cast<std::uint64_t>(block_[2 * used_ + 1]);
    ++used_;
    return (hi << 32) | lo;
  }

  /// Skips ahead by `blocks` 128-bit blocks.
  void discard_blocks(std::uint64_t blocks) noexcept {
    counter_ += blocks;
    used_ = 2;
  }

  /// One raw Philox4x32-10 evaluation; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> bijection(
      std::array<std::uint32_t, 4> ctr,
      std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

  void refill() noexcept {
    block_ = bijection({static_cast<std::uint32_t>(counter_),
                        static_cast<std::uint32_t>(counter_ >> 32), substream_,
                        purpose_},
                       key_);
    ++counter_;
    used_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t substream_;
  std::uint32_t purpose_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 2;
};

}  // namespace tracerflow
