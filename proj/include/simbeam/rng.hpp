#pragma once

#include <cstdint>

#include "simbeam/types.hpp"

namespace simbeam {

// Counter-based generator: every value is a pure function of
// (seed, stream, counter), so a draw indexed by `stream` is the same no
// matter which thread produces it or in what order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1], safe for log().
  double uniform_open0();
  double normal();
  // Circularly-symmetric CN(0, 1).
  cplx complex_normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable stream identifiers so that independent parts of an experiment never
// share random numbers.
namespace streams {
inline constexpr std::uint64_t kUsers = 0x75736572ULL;
inline constexpr std::uint64_t kPhaseInit = 0x70686173ULL;
inline constexpr std::uint64_t kBaseline = 0x62617365ULL;
inline constexpr std::uint64_t kChannelDraws = 0x1000000000ULL;
inline constexpr std::uint64_t kPowerGrid = 0x67726964ULL;
}  // namespace streams

std::uint64_t mix64(std::uint64_t x);

}  // namespace simbeam
