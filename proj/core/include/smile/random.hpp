#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace smile {

/// Counter-based generator. Every draw is a pure function of
/// (key, stream, counter), so results do not depend on call order or on
/// how work is split across threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0);

  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform on [0, 1).
  double uniform(std::uint64_t counter) const;
  /// Standard normal; consumes counters 2c and 2c+1 of a private lane.
  double normal(std::uint64_t counter) const;

  CounterRng substream(std::uint64_t stream) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t lane_;
};

/// Sequential view over a CounterRng for algorithms that just want "the next draw".
class RngStream {
 public:
  explicit RngStream(CounterRng rng) : rng_(rng) {}
  RngStream(std::uint64_t key, std::uint64_t stream) : rng_(key, stream) {}

  double uniform() { return rng_.uniform(next_++); }
  double normal() { return rng_.normal(next_++); }
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng);

/// Mixes several integers into one 64-bit key; used to derive per-purpose seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace smile
