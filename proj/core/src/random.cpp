#include "smile/random.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace smile {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix(splitmix(a) ^ (b * kGolden + 0x632be59bd9b4e019ULL)); }

CounterRng::CounterRng(std::uint64_t key, std::uint64_t stream) : key_(key), lane_(mix_seed(key, stream)) {}

std::uint64_t CounterRng::bits(std::uint64_t counter) const { return splitmix(lane_ ^ splitmix(counter)); }

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t counter) const {
  // Box-Muller on a lane disjoint from uniform() draws.
  const std::uint64_t base = 2 * counter;
  const double u1 = (static_cast<double>(splitmix(lane_ ^ kGolden ^ splitmix(base)) >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(splitmix(lane_ ^ kGolden ^ splitmix(base + 1)) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CounterRng CounterRng::substream(std::uint64_t stream) const { return CounterRng(key_, mix_seed(lane_, stream)); }

std::size_t RngStream::below(std::size_t n) {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng_.bits(next_++);
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  return perm;
}

}  // namespace smile
