#pragma once

#include <cstdint>
#include <random>

namespace fdnn {

/// Roles used to key independent random substreams.
enum class StreamRole : std::uint64_t {
  kEta = 1,
  kNoise = 2,
  kInit = 3,
  kShuffle = 4,
  kDataset = 5,
  kTrain = 6,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a substream seed from (seed, index, role). Distinct keys give
/// statistically independent streams.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index, StreamRole role);

/// Seeded random stream with a fixed, portable algorithm stack:
///   engine   std::mt19937_64 (bit-exact across standard libraries)
///   uniform  top 53 bits of one engine output, scaled to [0, 1)
///   normal   Marsaglia polar method, the spare deviate is cached
/// std::normal_distribution is implementation-defined, so it is not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t index, StreamRole role)
      : engine_(substream_seed(seed, index, role)) {}

  double uniform();
  double normal();
  /// Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fdnn
