// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace mfsir {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream.
///
/// The 128-bit Philox counter is split into a 64-bit block index (low words)
/// and a 64-bit stream id (high words); the key comes from the seed. Two
/// streams with different (key, stream id) never share a counter block, so
/// replications can be generated in any order on any worker.
class RngStream {
 public:
  using result_type = std::uint32_t;

  RngStream(std::uint64_t key, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Exponential with the given rate.
  double exponential(double rate);

  std::uint64_t key() const { return key_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 64-bit finalizer from SplitMix64.
std::uint64_t mix64(std::uint64_t x);
/// FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

/// Stream for replication `index` of the computation named `purpose`.
/// Identical inputs give identical streams; distinct (purpose, index) pairs
/// select disjoint keys or counter ranges.
RngStream derive_stream(std::uint64_t base_seed, std::string_view purpose,
                        std::uint64_t index);

}  // namespace mfsir
