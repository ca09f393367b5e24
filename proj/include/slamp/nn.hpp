#pragma once

#include <Eigen/QR>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "slamp/conv.hpp"

namespace slamp {

/// Named, ordered collection of trainable leaf variables.
template <class T>
class ParameterStore {
 public:
  Var<T> add(const std::string& name, Tensor<T> init) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    index_[name] = params_.size();
    names_.push_back(name);
    params_.emplace_back(std::move(init), true);
    return params_.back();
  }

  std::size_t size() const noexcept { return params_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<Var<T>>& vars() noexcept { return params_; }
  const std::vector<Var<T>>& vars() const noexcept { return params_; }
  Var<T>& at(const std::string& name) { return params_.at(index_.at(name)); }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }
  std::size_t scalar_count_with_prefix(const std::string& prefix) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (names_[i].rfind(prefix, 0) == 0) n += params_[i].size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  std::vector<Var<T>> params_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

namespace init {

template <class T>
Tensor<T> uniform(Shape shape, T bound, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <class T>
Tensor<T> fan_in_uniform(Shape shape, int fan_in, std::mt19937_64& rng) {
  return uniform<T>(std::move(shape), static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in))), rng);
}

/// Square orthogonal matrix from the QR factorisation of a Gaussian draw.
template <class T>
RowMatrix<T> orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix so the draw is Haar-distributed.
  Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (int j = 0; j < n; ++j)
    if (d(j) < 0) q.col(j) = -q.col(j);
  return q.cast<T>();
}

}  // namespace init

template <class T>
struct Linear {
  Var<T> weight, bias;
  int in = 0, out = 0;

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, int in_features, int out_features, std::mt19937_64& rng)
      : in(in_features), out(out_features) {
    weight = store.add(name + ".weight", init::fan_in_uniform<T>({out, in}, in, rng));
    bias = store.add(name + ".bias", init::fan_in_uniform<T>({out}, in, rng));
  }
  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }
};

template <class T>
struct Conv2d {
  Var<T> weight, bias;
  int stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& name, int in_ch, int out_ch, int kernel, int stride_, int pad_,
         std::mt19937_64& rng)
      : stride(stride_), pad(pad_) {
    const int fan_in = in_ch * kernel * kernel;
    weight = store.add(name + ".weight", init::fan_in_uniform<T>({out_ch, in_ch, kernel, kernel}, fan_in, rng));
    bias = store.add(name + ".bias", init::fan_in_uniform<T>({out_ch}, fan_in, rng));
  }
  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
};

template <class T>
struct ConvTranspose2d {
  Var<T> weight, bias;
  int stride = 1, pad = 0;

  ConvTranspose2d() = default;
  ConvTranspose2d(ParameterStore<T>& store, const std::string& name, int in_ch, int out_ch, int kernel, int stride_,
                  int pad_, std::mt19937_64& rng)
      : stride(stride_), pad(pad_) {
    // Each output pixel receives about in_ch * (kernel/stride)^2 taps.
    const int fan_in = std::max(1, in_ch * (kernel / stride_) * (kernel / stride_));
    weight = store.add(name + ".weight", init::fan_in_uniform<T>({in_ch, out_ch, kernel, kernel}, fan_in, rng));
    bias = store.add(name + ".bias", init::fan_in_uniform<T>({out_ch}, fan_in, rng));
  }
  Var<T> operator()(const Var<T>& x) const { return conv_transpose2d(x, weight, bias, stride, pad); }
};

template <class T>
struct LstmState {
  Var<T> hidden, cell;
};

/// Standard LSTM cell, gates ordered (input, forget, candidate, output).
/// Input kernel uses fan-in uniform init; recurrent kernel is orthogonal per gate.
template <class T>
struct LstmCell {
  Var<T> weight, bias;
  int in = 0, hidden = 0;

  LstmCell() = default;
  LstmCell(ParameterStore<T>& store, const std::string& name, int in_features, int hidden_units, std::mt19937_64& rng)
      : in(in_features), hidden(hidden_units) {
    const int cols = in + hidden;
    Tensor<T> w = init::fan_in_uniform<T>({4 * hidden, cols}, cols, rng);
    for (int gate = 0; gate < 4; ++gate) {
      RowMatrix<T> q = init::orthogonal<T>(hidden, rng);
      for (int r = 0; r < hidden; ++r)
        for (int c = 0; c < hidden; ++c)
          w[static_cast<std::size_t>(gate * hidden + r) * cols + in + c] = q(r, c);
    }
    weight = store.add(name + ".weight", std::move(w));
    bias = store.add(name + ".bias", init::fan_in_uniform<T>({4 * hidden}, cols, rng));
  }

  LstmState<T> zero_state(int batch) const {
    return {Var<T>(Tensor<T>({batch, hidden})), Var<T>(Tensor<T>({batch, hidden}))};
  }

  LstmState<T> operator()(const Var<T>& x, const LstmState<T>& s) const {
    const Var<T> gates = linear(concat<T>({x, s.hidden}, 1), weight, bias);
    const Var<T> i = sigmoid(slice(gates, 1, 0, hidden));
    const Var<T> f = sigmoid(slice(gates, 1, hidden, hidden));
    const Var<T> g = tanh(slice(gates, 1, 2 * hidden, hidden));
    const Var<T> o = sigmoid(slice(gates, 1, 3 * hidden, hidden));
    const Var<T> c = f * s.cell + i * g;
    return {o * tanh(c), c};
  }
};

}  // namespace slamp
