#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include "fforge/layers.hpp"

namespace fforge {

template <typename T>
struct is_batch_norm : std::false_type {};
template <typename Scalar>
struct is_batch_norm<BatchNorm2d<Scalar>> : std::true_type {};

/// Calls `fn(Parameter&)` for every trainable tensor of a module, in a fixed
/// order. Modules expose `visit(v)`, which yields parameters and batch norms.
template <typename Module, typename Fn>
void for_each_parameter(Module& module, Fn&& fn) {
  module.visit([&](auto& item) {
    using T = std::decay_t<decltype(item)>;
    if constexpr (is_batch_norm<T>::value) {
      fn(item.gamma);
      fn(item.beta);
    } else {
      fn(item);
    }
  });
}

template <typename Module, typename Fn>
void for_each_batch_norm(Module& module, Fn&& fn) {
  module.visit([&](auto& item) {
    if constexpr (is_batch_norm<std::decay_t<decltype(item)>>::value) fn(item);
  });
}

template <typename Scalar>
struct Conv2d {
  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

  Conv2d() = default;
  Conv2d(const std::string& name, int in_ch, int out_ch, int k)
      : weight(name + ".weight", Shape{out_ch, in_ch, k, k}), bias(name + ".bias", Shape{1, out_ch, 1, 1}) {}

  /// He-normal weights, zero bias.
  void init(std::mt19937_64& rng) {
    const Shape s = weight.value.shape;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (s.c * s.h * s.w)));
    for (Eigen::Index i = 0; i < weight.value.data.size(); ++i) weight.value.data[i] = Scalar(dist(rng));
    bias.value.set_zero();
  }

  Var operator()(Tape<Scalar>& tape, Var x) { return conv2d(tape, x, weight, bias); }

  template <typename V>
  void visit(V&& v) {
    v(weight);
    v(bias);
  }
};

/// conv 3x3 -> batch norm -> ReLU.
template <typename Scalar>
struct ConvBnRelu {
  Conv2d<Scalar> conv;
  BatchNorm2d<Scalar> bn;

  ConvBnRelu() = default;
  ConvBnRelu(const std::string& name, int in_ch, int out_ch)
      : conv(name + ".conv", in_ch, out_ch, 3), bn(name + ".bn", out_ch) {}

  void init(std::mt19937_64& rng) { conv.init(rng); }

  Var operator()(Tape<Scalar>& tape, Var x, Mode mode) {
    return relu(tape, batch_norm(tape, conv(tape, x), bn, mode));
  }

  template <typename V>
  void visit(V&& v) {
    conv.visit(v);
    v(bn);
  }
};

/// out = ReLU(x + BN(conv(ReLU(BN(conv(x)))))) with an identity skip.
template <typename Scalar>
struct ResidualBlock {
  Conv2d<Scalar> conv1;
  BatchNorm2d<Scalar> bn1;
  Conv2d<Scalar> conv2;
  BatchNorm2d<Scalar> bn2;

  ResidualBlock() = default;
  ResidualBlock(const std::string& name, int channels)
      : conv1(name + ".conv1", channels, channels, 3),
        bn1(name + ".bn1", channels),
        conv2(name + ".conv2", channels, channels, 3),
        bn2(name + ".bn2", channels) {}

  void init(std::mt19937_64& rng) {
    conv1.init(rng);
    conv2.init(rng);
  }

  Var operator()(Tape<Scalar>& tape, Var x, Mode mode) {
    if (tape.shape(x).c != bn1.channels()) {
      throw std::invalid_argument("residual_block: channel mismatch");
    }
    Var h = relu(tape, batch_norm(tape, conv1(tape, x), bn1, mode));
    h = batch_norm(tape, conv2(tape, h), bn2, mode);
    return relu(tape, add(tape, x, h));
  }

  template <typename V>
  void visit(V&& v) {
    conv1.visit(v);
    v(bn1);
    conv2.visit(v);
    v(bn2);
  }
};

/// Conv/BN/ReLU stages separated by 2x2 max pools; the channel count doubles
/// after every pool.
template <typename Scalar>
struct Encoder {
  std::vector<ConvBnRelu<Scalar>> stages;

  Encoder() = default;
  Encoder(const std::string& name, int in_ch, int base, int pools) {
    stages.emplace_back(name + ".stage0", in_ch, base);
    int ch = base;
    for (int p = 1; p <= pools; ++p) {
      stages.emplace_back(name + ".stage" + std::to_string(p), ch, ch * 2);
      ch *= 2;
    }
  }

  [[nodiscard]] int pools() const { return static_cast<int>(stages.size()) - 1; }
  [[nodiscard]] int out_channels() const { return stages.back().bn.channels(); }

  void init(std::mt19937_64& rng) {
    for (auto& s : stages) s.init(rng);
  }

  Var operator()(Tape<Scalar>& tape, Var x, Mode mode) {
    Var h = stages.front()(tape, x, mode);
    for (std::size_t i = 1; i < stages.size(); ++i) h = stages[i](tape, max_pool2(tape, h), mode);
    return h;
  }

  template <typename V>
  void visit(V&& v) {
    for (auto& s : stages) s.visit(v);
  }
};

/// Residual chain followed by up-sampling conv stages and a 1x1 head with a
/// channel softmax.
template <typename Scalar>
struct Decoder {
  std::vector<ResidualBlock<Scalar>> blocks;
  std::vector<ConvBnRelu<Scalar>> ups;
  Conv2d<Scalar> head;

  Decoder() = default;
  Decoder(const std::string& name, int in_ch, int residual_blocks, int pools, int k) {
    for (int i = 0; i < residual_blocks; ++i) blocks.emplace_back(name + ".res" + std::to_string(i), in_ch);
    int ch = in_ch;
    for (int p = 0; p < pools; ++p) {
      ups.emplace_back(name + ".up" + std::to_string(p), ch, ch / 2);
      ch /= 2;
    }
    head = Conv2d<Scalar>(name + ".head", ch, k, 1);
  }

  void init(std::mt19937_64& rng) {
    for (auto& b : blocks) b.init(rng);
    for (auto& u : ups) u.init(rng);
    head.init(rng);
  }

  /// Returns the channel-softmax mask.
  Var operator()(Tape<Scalar>& tape, Var h, Mode mode) {
    for (auto& b : blocks) h = b(tape, h, mode);
    for (auto& u : ups) h = u(tape, upsample2(tape, h), mode);
    return softmax_channels(tape, head(tape, h));
  }

  template <typename V>
  void visit(V&& v) {
    for (auto& b : blocks) b.visit(v);
    for (auto& u : ups) u.visit(v);
    head.visit(v);
  }
};

/// Encoder-style feature stack with `pools` max pools, then global average
/// pooling, a 1x1 conv to one logit, and a sigmoid. Output shape (N,1,1,1).
template <typename Scalar>
struct Discriminator {
  Encoder<Scalar> features;
  Conv2d<Scalar> head;

  Discriminator() = default;
  Discriminator(const std::string& name, int in_ch, int base, int pools)
      : features(name, in_ch, base, pools), head(name + ".head", features.out_channels(), 1, 1) {}

  void init(std::mt19937_64& rng) {
    features.init(rng);
    head.init(rng);
  }

  Var operator()(Tape<Scalar>& tape, Var x, Mode mode) {
    Var h = global_avg_pool(tape, features(tape, x, mode));
    return sigmoid(tape, head(tape, h));
  }

  template <typename V>
  void visit(V&& v) {
    features.visit(v);
    head.visit(v);
  }
};

template <typename Scalar, typename Module>
void append_parameters(Module& m, std::vector<Parameter<Scalar>*>& out) {
  for_each_parameter(m, [&](Parameter<Scalar>& p) { out.push_back(&p); });
}

template <typename Module>
void zero_grads(Module& m) {
  for_each_parameter(m, [](auto& p) { p.zero_grad(); });
}

/// FNV-1a over the raw bytes of every parameter value, in visit order.
template <typename Module>
std::uint64_t parameter_checksum(Module& m) {
  std::uint64_t h = 1469598103934665603ULL;
  for_each_parameter(m, [&](auto& p) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data.data());
    const std::size_t len = static_cast<std::size_t>(p.value.data.size()) * sizeof(p.value.data[0]);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  });
  return h;
}

}  // namespace fforge
