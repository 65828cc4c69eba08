#pragma once

#include <cstdint>

namespace rnsgp {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, index), so results do not depend on evaluation order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  /// 64 random bits for the given counter (splitmix64 finalizer chain).
  [[nodiscard]] std::uint64_t bits(std::uint64_t index) const;
  /// Uniform on the open interval (0, 1).
  [[nodiscard]] double uniform(std::uint64_t index) const;
  /// Standard normal via Box–Muller on two counter draws.
  [[nodiscard]] double normal(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rnsgp
