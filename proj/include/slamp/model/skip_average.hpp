#pragma once

#include <vector>

#include "slamp/ops.hpp"

namespace slamp {

/// Element-wise mean of every skip set pushed so far, one tensor per
/// encoder stage, updated in O(1) state per stage.
template <class T>
class SkipRunningAverage {
 public:
  void push(const std::vector<Var<T>>& skips) {
    if (count_ == 0) {
      mean_ = skips;
    } else {
      if (skips.size() != mean_.size()) detail::shape_fail("skip history: stage count changed");
      const T keep = static_cast<T>(count_) / static_cast<T>(count_ + 1);
      const T add = T{1} / static_cast<T>(count_ + 1);
      for (std::size_t i = 0; i < skips.size(); ++i) mean_[i] = scale(mean_[i], keep) + scale(skips[i], add);
    }
    ++count_;
  }

  const std::vector<Var<T>>& mean() const {
    detail::require(count_ > 0, "skip running average is empty");
    return mean_;
  }
  std::size_t count() const noexcept { return count_; }

 private:
  std::vector<Var<T>> mean_;
  std::size_t count_ = 0;
};

/// Batch form over a full history: sum of entries divided by their count.
template <class T>
std::vector<Var<T>> skip_running_average(const std::vector<std::vector<Var<T>>>& history) {
  detail::require(!history.empty(), "skip_running_average needs a non-empty history");
  std::vector<Var<T>> out;
  for (std::size_t stage = 0; stage < history[0].size(); ++stage) {
    Var<T> total = history[0][stage];
    for (std::size_t i = 1; i < history.size(); ++i) {
      if (history[i].size() != history[0].size()) detail::shape_fail("skip history: stage count changed");
      total = total + history[i][stage];
    }
    out.push_back(scale(total, T{1} / static_cast<T>(history.size())));
  }
  return out;
}

}  // namespace slamp
