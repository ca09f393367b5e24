#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "slamp/tensor.hpp"

namespace slamp {

/// splitmix64 finaliser; used to derive independent substream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

/// Standard-normal noise with one independent stream per batch row, so a
/// row's draws do not depend on how many other rows share the batch.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, int batch) {
    rows_.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) rows_.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  }
  explicit NoiseSource(const std::vector<std::uint64_t>& row_seeds) {
    for (auto s : row_seeds) rows_.emplace_back(s);
  }

  int batch() const noexcept { return static_cast<int>(rows_.size()); }

  template <class T>
  Tensor<T> normal(int dim) {
    Tensor<T> out(Shape{batch(), dim});
    for (int r = 0; r < batch(); ++r) {
      // Per-row distribution: a shared one would carry its cached spare
      // variate from one row's engine into the next row.
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int j = 0; j < dim; ++j) out[static_cast<std::size_t>(r) * dim + j] = static_cast<T>(dist(rows_[r]));
    }
    return out;
  }

  double uniform(int row) { return std::uniform_real_distribution<double>(0.0, 1.0)(rows_[static_cast<std::size_t>(row)]); }

 private:
  std::vector<std::mt19937_64> rows_;
};

}  // namespace slamp
