#pragma once

#include <random>
#include <string>
#include <vector>

#include "slamp/model/config.hpp"
#include "slamp/nn.hpp"

namespace slamp {

template <class T>
struct EncoderOutput {
  Var<T> features;         // [B, g]
  std::vector<Var<T>> skips;  // one per stage, finest first
};

/// Stride-2 convolution stages followed by a linear projection to g
/// features with tanh. Each stage's activation is kept as a skip tensor.
template <class T>
class ConvEncoder {
 public:
  ConvEncoder() = default;
  ConvEncoder(ParameterStore<T>& store, const std::string& name, const ModelConfig& cfg, int in_channels,
              std::mt19937_64& rng)
      : in_channels_(in_channels), image_size_(cfg.image_size) {
    int prev = in_channels;
    for (std::size_t i = 0; i < cfg.encoder_channels.size(); ++i) {
      const int ch = cfg.encoder_channels[i];
      stages_.emplace_back(store, name + ".stage" + std::to_string(i), prev, ch, 4, 2, 1, rng);
      prev = ch;
    }
    const int s = cfg.bottleneck_size();
    head_ = Linear<T>(store, name + ".head", prev * s * s, cfg.feature_dim, rng);
  }

  EncoderOutput<T> operator()(const Var<T>& x) const {
    if (x.shape().size() != 4 || x.dim(1) != in_channels_ || x.dim(2) != image_size_ || x.dim(3) != image_size_)
      detail::shape_fail("encoder expects [B," + std::to_string(in_channels_) + "," + std::to_string(image_size_) + "," +
                         std::to_string(image_size_) + "], got " + shape_str(x.shape()));
    EncoderOutput<T> out;
    Var<T> h = x;
    for (const auto& stage : stages_) {
      h = leaky_relu(stage(h));
      out.skips.push_back(h);
    }
    out.features = tanh(head_(flatten(h)));
    return out;
  }

 private:
  int in_channels_ = 0, image_size_ = 0;
  std::vector<Conv2d<T>> stages_;
  Linear<T> head_;
};

enum class OutputActivation { sigmoid, bounded_tanh };

/// Mirror of ConvEncoder: projects g features to the bottleneck grid, then
/// upsamples with transposed convolutions, concatenating the matching skip
/// tensor before each stage.
template <class T>
class ConvDecoder {
 public:
  ConvDecoder() = default;
  ConvDecoder(ParameterStore<T>& store, const std::string& name, const ModelConfig& cfg, int out_channels,
              OutputActivation act, double bound, std::mt19937_64& rng)
      : channels_(cfg.encoder_channels), bottleneck_(cfg.bottleneck_size()), out_channels_(out_channels), act_(act),
        bound_(static_cast<T>(bound)) {
    const int s = bottleneck_;
    project_ = Linear<T>(store, name + ".project", cfg.feature_dim, channels_.back() * s * s, rng);
    for (int i = static_cast<int>(channels_.size()) - 1; i >= 0; --i) {
      const int out = i > 0 ? channels_[static_cast<std::size_t>(i) - 1] : out_channels;
      ups_.emplace_back(store, name + ".up" + std::to_string(i), 2 * channels_[static_cast<std::size_t>(i)], out, 4, 2, 1,
                        rng);
    }
  }

  Var<T> operator()(const Var<T>& g, const std::vector<Var<T>>& skips) const {
    if (skips.size() != channels_.size())
      detail::shape_fail("decoder expects " + std::to_string(channels_.size()) + " skip tensors, got " +
                         std::to_string(skips.size()));
    const int b = g.dim(0);
    Var<T> h = reshape(leaky_relu(project_(g)), Shape{b, channels_.back(), bottleneck_, bottleneck_});
    for (std::size_t k = 0; k < ups_.size(); ++k) {
      const std::size_t stage = channels_.size() - 1 - k;
      h = ups_[k](concat<T>({h, skips[stage]}, 1));
      if (stage > 0) h = leaky_relu(h);
    }
    if (act_ == OutputActivation::sigmoid) return sigmoid(h);
    return scale(tanh(h), bound_);
  }

  int out_channels() const noexcept { return out_channels_; }

 private:
  std::vector<int> channels_;
  int bottleneck_ = 0, out_channels_ = 0;
  OutputActivation act_ = OutputActivation::sigmoid;
  T bound_{1};
  Linear<T> project_;
  std::vector<ConvTranspose2d<T>> ups_;
};

/// Channel attention: global pool, bottleneck MLP, sigmoid gate per channel.
template <class T>
struct SqueezeExcitation {
  Linear<T> reduce, expand;

  SqueezeExcitation() = default;
  SqueezeExcitation(ParameterStore<T>& store, const std::string& name, int channels, int reduction, std::mt19937_64& rng)
      : reduce(store, name + ".reduce", channels, std::max(1, channels / reduction), rng),
        expand(store, name + ".expand", std::max(1, channels / reduction), channels, rng) {}

  Var<T> operator()(const Var<T>& x) const { return scale_channels(x, sigmoid(expand(relu(reduce(global_avg_pool(x)))))); }
};

/// Five 3x3 same-resolution convolutions with squeeze-excitation after the
/// second and fourth; sigmoid output is the appearance weight.
template <class T>
class MaskPredictor {
 public:
  MaskPredictor() = default;
  MaskPredictor(ParameterStore<T>& store, const std::string& name, const ModelConfig& cfg, std::mt19937_64& rng) {
    const int w = cfg.mask_width;
    int prev = 2 * cfg.channels;
    for (int i = 0; i < 4; ++i) {
      convs_.emplace_back(store, name + ".conv" + std::to_string(i), prev, w, 3, 1, 1, rng);
      prev = w;
    }
    convs_.emplace_back(store, name + ".conv4", w, 1, 3, 1, 1, rng);
    se_[0] = SqueezeExcitation<T>(store, name + ".se0", w, cfg.se_reduction, rng);
    se_[1] = SqueezeExcitation<T>(store, name + ".se1", w, cfg.se_reduction, rng);
  }

  Var<T> operator()(const Var<T>& appearance, const Var<T>& motion) const {
    if (appearance.shape() != motion.shape())
      detail::shape_fail("mask_predict: " + shape_str(appearance.shape()) + " vs " + shape_str(motion.shape()));
    Var<T> h = concat<T>({appearance, motion}, 1);
    h = leaky_relu(convs_[0](h));
    h = se_[0](leaky_relu(convs_[1](h)));
    h = leaky_relu(convs_[2](h));
    h = se_[1](leaky_relu(convs_[3](h)));
    return sigmoid(convs_[4](h));
  }

 private:
  std::vector<Conv2d<T>> convs_;
  SqueezeExcitation<T> se_[2];
};

}  // namespace slamp
