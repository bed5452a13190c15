#include "fastdeco/random.hpp"

#include <utility>

namespace fastdeco {

RandomStream::RandomStream(std::uint64_t seed) : key_{seed} { reseed(); }

RandomStream::RandomStream(std::vector<std::uint64_t> key)
    : key_(std::move(key)) {
  reseed();
}

void RandomStream::reseed() {
  std::vector<std::uint32_t> words;
  words.reserve(2 * key_.size() + 1);
  // length prefix keeps (a) and (a, 0) distinct
  words.push_back(static_cast<std::uint32_t>(key_.size()));
  for (auto k : key_) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
  normal_.reset();
}

RandomStream RandomStream::split(std::uint64_t i) const {
  auto key = key_;
  key.push_back(i);
  return RandomStream(std::move(key));
}

RandomStream RandomStream::next_substream() {
  // offset so substreams never collide with split(i) children
  return split(counter_++ | (std::uint64_t{1} << 63));
}

double RandomStream::uniform() { return uniform_(engine_); }

double RandomStream::normal() { return normal_(engine_); }

void RandomStream::fill_normal(double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = normal_(engine_);
}

}  // namespace fastdeco
