#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace rowless {

// All randomness in the library flows through this wrapper. std::mt19937_64
// has a standard-mandated output sequence, but the std::uniform_* adapters do
// not, so the bounded draws are implemented here to keep seeded runs
// bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), returned ascending.
  // When k >= n this is simply every index.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (k >= n) return idx;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + static_cast<std::size_t>(below(n - i))]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace rowless
