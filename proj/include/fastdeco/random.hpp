#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fastdeco {

// Seedable, splittable pseudo-random stream. A child stream is keyed by the
// parent's key plus an index, so the same (seed, path) always reproduces the
// same numbers regardless of which thread consumes them.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed = 0);

  // Independent child stream for index `i`. Does not advance this stream.
  RandomStream split(std::uint64_t i) const;
  // Next child in sequence; advances an internal counter.
  RandomStream next_substream();

  double uniform();  // [0, 1)
  double normal();   // standard normal
  void fill_normal(double* out, std::size_t n);

  std::mt19937_64& engine() { return engine_; }
  const std::vector<std::uint64_t>& key() const { return key_; }

private:
  explicit RandomStream(std::vector<std::uint64_t> key);
  void reseed();

  std::vector<std::uint64_t> key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
  std::uint64_t counter_ = 0;
};

}  // namespace fastdeco
