#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "slamp/nn.hpp"

namespace slamp {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 10.0;  // global gradient norm; <= 0 disables clipping

  void validate() const {
    if (lr < 0) throw ConfigError("lr must be >= 0");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must be in [0, 1)");
    if (!(eps > 0)) throw ConfigError("Adam eps must be positive");
  }
};

inline void to_json(nlohmann::json& j, const AdamConfig& c) {
  j = {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"clip_norm", c.clip_norm}};
}
inline void from_json(const nlohmann::json& j, AdamConfig& c) {
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
}

/// Adam over every tensor in a ParameterStore, with optional global-norm
/// gradient clipping applied before the moment updates.
template <class T>
class Adam {
 public:
  Adam(ParameterStore<T>& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
    cfg_.validate();
    for (const auto& p : params.vars()) {
      m_.emplace_back(p.shape(), T{0});
      v_.emplace_back(p.shape(), T{0});
    }
  }

  /// Applies one update from the accumulated gradients; returns the
  /// pre-clipping global gradient norm.
  double step() {
    auto& vars = params_->vars();
    double sq = 0;
    for (const auto& p : vars)
      for (T g : p.grad().values()) sq += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(sq);
    const double clip = (cfg_.clip_norm > 0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T step_size = static_cast<T>(cfg_.lr / bc1), eps = static_cast<T>(cfg_.eps);
    const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i].grad().empty()) continue;  // never touched by the graph
      T* w = vars[i].mutable_value().data();
      const T* g = vars[i].grad().data();
      T* m = m_[i].data();
      T* v = v_[i].data();
      for (std::size_t k = 0; k < m_[i].size(); ++k) {
        const T gk = static_cast<T>(g[k] * clip);
        m[k] = b1 * m[k] + (T{1} - b1) * gk;
        v[k] = b2 * v[k] + (T{1} - b2) * gk * gk;
        w[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_bc2 + eps);
      }
    }
    return norm;
  }

  const AdamConfig& config() const noexcept { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  std::int64_t steps() const noexcept { return t_; }

  // State access for checkpointing.
  std::vector<Tensor<T>>& first_moments() noexcept { return m_; }
  std::vector<Tensor<T>>& second_moments() noexcept { return v_; }
  const std::vector<Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moments() const noexcept { return v_; }
  void set_steps(std::int64_t t) noexcept { t_ = t; }

 private:
  ParameterStore<T>* params_;
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace slamp
