// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

namespace flowdistill {

/// Philox4x32-10 counter-based block cipher (Salmon et al., Random123).
///
/// Stateless: a (counter, key) pair maps to four 32-bit words. The
/// implementation reproduces the published known-answer vectors, which is
/// what makes seeded runs byte-identical across platforms.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  static Counter generate(Counter counter, Key key);
};

/// Named sub-streams. Each random quantity in an experiment draws from
/// exactly one (seed, stream) pair.
enum class Stream : std::uint32_t {
  kInitialNoise = 1,
  kFreshNoise = 2,
  kTimestep = 3,
  kCamera = 4,
  kWorldMap = 5,
  kBackgroundNoise = 6,
  kProbe = 7,
  kConstantNoise = 8,
};

/// Sequential view over Philox output for one (seed, stream, index) triple.
/// Normals use Box-Muller with the paired value cached.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, Stream stream, std::uint32_t index = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  void fill_normal(std::span<double> out);

  std::uint64_t seed() const { return seed_; }

 private:
  void refill();

  std::uint64_t seed_;
  Philox4x32::Key key_;
  std::uint32_t stream_word_;
  std::uint32_t index_word_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int cursor_ = 4;
  std::optional<double> cached_normal_;
};

}  // namespace flowdistill
