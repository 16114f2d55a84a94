#ifndef UQSTREAM_RNG_HPP
#define UQSTREAM_RNG_HPP

#include <cstdint>
#include <random>

namespace uqstream {

using Rng = std::mt19937_64;

/// Named random substreams. Each (seed, replication, salt, stream, stage)
/// tuple maps to an independent generator, so that method comparisons can
/// share data while drawing θ-samples and simulation noise independently.
enum class Stream : std::uint64_t {
  kData = 1,
  kTheta = 2,
  kSimulation = 3,
  kAuxiliary = 4,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based substream derivation.
Rng make_stream(std::uint64_t seed, std::uint64_t replication, Stream stream,
                std::uint64_t stage = 0, std::uint64_t salt = 0);

/// Bundles the coordinates an algorithm instance needs to fork its own
/// per-stage θ and simulation streams.
struct StreamSet {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  std::uint64_t salt = 0;

  Rng theta(std::uint64_t stage) const {
    return make_stream(seed, replication, Stream::kTheta, stage, salt);
  }
  Rng simulation(std::uint64_t stage) const {
    return make_stream(seed, replication, Stream::kSimulation, stage, salt);
  }
  /// θ draws and simulations of a restart at `stage`.
  Rng restart(std::uint64_t stage) const {
    return make_stream(seed, replication, Stream::kAuxiliary, stage, salt);
  }
  /// Data is shared across methods: the salt is deliberately not applied.
  Rng data() const { return make_stream(seed, replication, Stream::kData); }
};

}  // namespace uqstream

#endif  // UQSTREAM_RNG_HPP
