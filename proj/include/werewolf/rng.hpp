#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace werewolf {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// mt19937_64 output is fixed by the standard, but the standard distributions are not,
// so range reduction and shuffling are done here to keep logs portable across toolchains.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next() {
    ++draws_;
    return engine_();
  }

  // Uniform in [0, n).
  std::size_t index(std::size_t n);

  template <class T>
  const T& pick(std::span<const T> items) {
    if (items.empty()) throw std::invalid_argument("pick from empty range");
    return items[index(items.size())];
  }

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return pick(std::span<const T>(items));
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  SeededRng fork(std::uint64_t salt) const { return SeededRng(mix_seed(seed_, salt)); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
};

}  // namespace werewolf
