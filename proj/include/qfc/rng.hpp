// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace qfc {

//---------------------------------------------------------------------------//
/*!
 * Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
 *
 * Every random number used by the simulators is a pure function of
 * (seed, stream, index, draw), so samples do not depend on evaluation order
 * or on how many worker threads share the work. The counter layout is
 *
 *   ctr = {index_lo, index_hi, stream, draw},  key = {seed_lo, seed_hi}
 *
 * and this layout is part of the golden-output contract.
 */
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Block encrypt(Block ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Block single_round(const Block& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Named RNG streams so independent consumers of one seed never collide.
enum class RngStream : std::uint32_t {
  fringe = 1,
  singles_scan = 2,
  basis_counts = 3,
  reconstruct = 4,
  derive = 5,
  test = 0xFFFF,
};

//---------------------------------------------------------------------------//
/*!
 * Sequential view over one (seed, stream, index) counter slot.
 *
 * Successive calls advance only the `draw` word, so each slot yields an
 * independent deterministic sequence of up to 2^32 blocks.
 */
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
             static_cast<std::uint32_t>(stream), 0u} {}

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the Box-Muller transform (one value per call).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Poisson variate. Exact inversion for mean < 30; above that a normal
  /// approximation with continuity correction, max(0, floor(mean + sqrt(mean) z + 1/2)).
  std::int64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < kPoissonInversionLimit) {
      const double u = uniform();
      double term = std::exp(-mean);
      double cdf = term;
      std::int64_t k = 0;
      while (u > cdf && k < 1000) {
        ++k;
        term *= mean / static_cast<double>(k);
        cdf += term;
      }
      return k;
    }
    const double x = std::floor(mean + std::sqrt(mean) * normal() + 0.5);
    return x < 0.0 ? 0 : static_cast<std::int64_t>(x);
  }

  static constexpr double kPoissonInversionLimit = 30.0;

 private:
  void refill() {
    block_ = Philox4x32::encrypt(ctr_, key_);
    ++ctr_[3];
    used_ = 0;
  }

  Philox4x32::Key key_;
  Philox4x32::Block ctr_;
  Philox4x32::Block block_{};
  int used_ = 4;
};

/// Independent seed for the `tag`-th dataset of one run.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return CounterRng(seed, RngStream::derive, tag).next_u64();
}

}  // namespace qfc
