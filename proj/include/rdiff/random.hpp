#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rdiff {

/// Independent, reproducible stream for a composite key such as
/// (master seed, run, agent, round). Distinct keys give unrelated streams.
std::mt19937_64 keyed_rng(std::initializer_list<std::uint64_t> key);

/// Stream tags used as the second key word so that different consumers of
/// the same master seed never share a stream.
enum class StreamTag : std::uint64_t {
  kData = 1,
  kOutliers = 2,
  kInit = 3,
  kTopology = 4,
  kNoise = 5,
  kPartition = 6,
};

}  // namespace rdiff
