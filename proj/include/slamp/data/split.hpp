#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "slamp/data/moving_mnist.hpp"

namespace slamp {

/// Random-access collection of clips.
class VideoSource {
 public:
  virtual ~VideoSource() = default;
  virtual std::size_t size() const = 0;
  virtual Video get(std::size_t i) const = 0;
};

/// Clips held in memory (e.g. read from a dataset container).
class MemorySource : public VideoSource {
 public:
  explicit MemorySource(std::vector<Video> clips) : clips_(std::move(clips)) {}
  std::size_t size() const override { return clips_.size(); }
  Video get(std::size_t i) const override { return clips_.at(i); }

 private:
  std::vector<Video> clips_;
};

/// Clips generated on demand; clip i always uses seed derive_seed(base, i).
class GeneratedSource : public VideoSource {
 public:
  GeneratedSource(MovingMnistConfig cfg, std::shared_ptr<const ImageSet> digits, std::uint64_t base_seed,
                  std::size_t count)
      : cfg_(std::move(cfg)), digits_(std::move(digits)), base_(base_seed), count_(count) {
    cfg_.validate();
  }
  std::size_t size() const override { return count_; }
  Video get(std::size_t i) const override {
    if (i >= count_) throw PreconditionError("GeneratedSource: index out of range");
    return generate_moving_mnist(cfg_, *digits_, derive_seed(base_, i));
  }
  const MovingMnistConfig& config() const noexcept { return cfg_; }

 private:
  MovingMnistConfig cfg_;
  std::shared_ptr<const ImageSet> digits_;
  std::uint64_t base_;
  std::size_t count_;
};

/// Subset of a source; batches are drawn without replacement in an order
/// reshuffled per epoch. Partial trailing batches are dropped.
class SplitView {
 public:
  SplitView() = default;
  SplitView(std::shared_ptr<const VideoSource> src, std::vector<std::size_t> indices)
      : src_(std::move(src)), indices_(std::move(indices)) {}
  /// Every clip of `src`, in order.
  static SplitView all(std::shared_ptr<const VideoSource> src) {
    std::vector<std::size_t> idx(src->size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return SplitView(std::move(src), std::move(idx));
  }

  std::size_t size() const noexcept { return indices_.size(); }
  Video get(std::size_t i) const { return src_->get(indices_.at(i)); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

  class BatchIterator {
   public:
    BatchIterator(const SplitView* view, std::size_t batch, std::uint64_t seed, bool shuffle)
        : view_(view), batch_(batch), seed_(seed), shuffle_(shuffle) {
      if (batch_ == 0) throw ConfigError("batch size must be positive");
      if (view_->size() < batch_)
        throw ConfigError("split of " + std::to_string(view_->size()) + " clips cannot fill a batch of " +
                          std::to_string(batch_));
      start_epoch();
    }

    /// Fills `out` with the next batch; false at the end of an epoch (the
    /// following call starts the next epoch).
    bool next(std::vector<Video>& out) {
      if (pos_ + batch_ > order_.size()) {
        ++epoch_;
        start_epoch();
        return false;
      }
      out.clear();
      for (std::size_t k = 0; k < batch_; ++k) out.push_back(view_->get(order_[pos_ + k]));
      pos_ += batch_;
      return true;
    }

    /// Like next() but rolls over epochs transparently.
    std::vector<Video> next_cycling() {
      std::vector<Video> out;
      if (!next(out)) next(out);
      return out;
    }

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batches_per_epoch() const noexcept { return order_.size() / batch_; }

    /// Positions the iterator as if `consumed` batches had been drawn with
    /// next_cycling(); used when resuming training.
    void seek(std::size_t consumed) {
      epoch_ = consumed / batches_per_epoch();
      start_epoch();
      pos_ = (consumed % batches_per_epoch()) * batch_;
    }

   private:
    void start_epoch() {
      order_.resize(view_->size());
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      if (shuffle_) {
        std::mt19937_64 rng(derive_seed(seed_, epoch_));
        std::shuffle(order_.begin(), order_.end(), rng);
      }
      pos_ = 0;
    }

    const SplitView* view_;
    std::size_t batch_;
    std::uint64_t seed_;
    bool shuffle_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0, epoch_ = 0;
  };

  BatchIterator batches(std::size_t batch_size, std::uint64_t seed, bool shuffle = true) const {
    return BatchIterator(this, batch_size, seed, shuffle);
  }

 private:
  std::shared_ptr<const VideoSource> src_;
  std::vector<std::size_t> indices_;
};

struct DatasetSplits {
  SplitView train, val, test;
};

/// Seeded permutation of the source cut into train/val/test. Validation
/// and test sizes are rounded; train takes the remainder.
inline DatasetSplits dataset_split(std::shared_ptr<const VideoSource> src, std::array<double, 3> ratios,
                                   std::uint64_t seed) {
  double total = 0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  const std::size_t n = src->size();
  const auto n_val = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(ratios[2] * static_cast<double>(n)));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n)
    throw ConfigError("split of " + std::to_string(n) + " clips leaves an empty partition");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t n_train = n - n_val - n_test;
  DatasetSplits s;
  s.train = SplitView(src, {perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train)});
  s.val = SplitView(src, {perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                          perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val)});
  s.test = SplitView(src, {perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end()});
  return s;
}

inline DatasetSplits dataset_split(std::vector<Video> videos, std::array<double, 3> ratios, std::uint64_t seed) {
  return dataset_split(std::make_shared<MemorySource>(std::move(videos)), ratios, seed);
}

}  // namespace slamp
