#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <boost/math/special_functions/erf.hpp>

namespace infocredit {

struct Seed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Deterministic random stream keyed by (seed, stream_id, substream).
///
/// The engine is a 64-bit Mersenne twister seeded through std::seed_seq with
/// the six 32-bit halves of the key, so the sequence is fully specified by the
/// standard and identical across platforms. Stream consumption is fixed:
/// uniform() and normal() each consume exactly one 64-bit engine output
/// (normals use the inverse CDF).
class Rng {
public:
  explicit Rng(Seed key, std::uint64_t substream = 0) : engine_(make_engine(key, substream)) {}

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

  double normal() { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * uniform()); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t bits() { return engine_(); }

  friend bool operator==(const Rng&, const Rng&) = default;

private:
  static std::mt19937_64 make_engine(Seed key, std::uint64_t substream) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(key.seed), hi(key.seed), lo(key.stream_id), hi(key.stream_id), lo(substream), hi(substream)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
};

} // namespace infocredit
