#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fforge/adam.hpp"
#include "fforge/gan.hpp"
#include "fforge/model_bundle.hpp"
#include "fforge/polygonize.hpp"

namespace fforge {

struct CornerNetConfig {
  int base_channels = 8;
  int pools = 2;
  int residual_blocks = 4;

  void validate() const {
    if (base_channels <= 0 || pools < 0 || residual_blocks < 0) throw std::invalid_argument("CornerNetConfig: invalid sizes");
  }
};

/// Generator-style network with a single-channel mask input; channel 0 of
/// the 2-way softmax is the corner probability.
template <typename Scalar>
class CornerNet {
 public:
  CornerNet() = default;
  CornerNet(const CornerNetConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    encoder = Encoder<Scalar>("C_E", 1, config.base_channels, config.pools);
    decoder = Decoder<Scalar>("C_F", config.base_channels << config.pools, config.residual_blocks, config.pools, 2);
    std::mt19937_64 rng(seed);
    encoder.init(rng);
    decoder.init(rng);
  }

  [[nodiscard]] const CornerNetConfig& config() const { return config_; }
  [[nodiscard]] int divisor() const { return 1 << config_.pools; }

  Var forward(Tape<Scalar>& tape, Var masks, Mode mode) {
    const Shape s = tape.shape(masks);
    if (s.h % divisor() != 0 || s.w % divisor() != 0) {
      throw std::invalid_argument("corner net: spatial dims " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                                  " must be divisible by " + std::to_string(divisor()));
    }
    return decoder(tape, encoder(tape, masks, mode), mode);
  }

  std::vector<Parameter<Scalar>*> parameters() {
    std::vector<Parameter<Scalar>*> out;
    append_parameters<Scalar>(encoder, out);
    append_parameters<Scalar>(decoder, out);
    return out;
  }

  template <typename V>
  void visit(V&& v) {
    encoder.visit(v);
    decoder.visit(v);
  }

  ModelBundle to_bundle() {
    ModelBundle b;
    b.set_meta("kind", 1);
    b.set_meta("base_channels", config_.base_channels);
    b.set_meta("pools", config_.pools);
    b.set_meta("residual_blocks", config_.residual_blocks);
    export_module(*this, b);
    return b;
  }

  static CornerNet from_bundle(const ModelBundle& b) {
    if (b.empty()) throw std::runtime_error("corner model is empty");
    if (b.require_meta("kind") != 1) throw std::runtime_error("ModelBundle does not hold a corner net");
    CornerNetConfig c;
    c.base_channels = static_cast<int>(b.require_meta("base_channels"));
    c.pools = static_cast<int>(b.require_meta("pools"));
    c.residual_blocks = static_cast<int>(b.require_meta("residual_blocks"));
    CornerNet net(c, 0);
    import_module(net, b);
    return net;
  }

  Encoder<Scalar> encoder;
  Decoder<Scalar> decoder;

 private:
  CornerNetConfig config_;
};

/// Corner probabilities for a mask whose dims are divisible by 4 (more
/// precisely by 2^pools). Eval mode; no thresholding.
template <typename Scalar>
CornerMap detect_corners(CornerNet<Scalar>& net, const Mask& mask) {
  Tape<Scalar> tape;
  const Var out = net.forward(tape, tape.constant(detail::mask_tensor<Scalar>(mask)), Mode::kEval);
  const Tensor<Scalar>& t = tape.value(out);
  CornerMap map(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) map(r, c) = std::clamp(static_cast<float>(t.at(0, 0, r, c)), 0.0f, 1.0f);
  return map;
}

CornerMap detect_corners(const Mask& mask, const ModelBundle& corner_model);

/// Runs a trained corner net on every instance crop. Inference never
/// mutates the network, so concurrent calls are safe.
class CornerNetDetector final : public CornerDetector {
 public:
  explicit CornerNetDetector(const ModelBundle& bundle) : net_(CornerNet<float>::from_bundle(bundle)) {}
  [[nodiscard]] CornerMap detect(const Mask& crop, PixelPos) const override { return detect_corners(net_, crop); }

 private:
  mutable CornerNet<float> net_;
};

/// Target map with a disk of `radius` around each vertex. The disk is
/// centered on the boundary pixel (foreground, 4-adjacent to background)
/// nearest to the vertex, first in raster order on ties, and covers the
/// pixels within L2 distance `radius` of that center.
Mask corner_target(const Mask& mask, std::span<const Point> vertices, double radius = 2.0);

struct CornerSample {
  Mask mask;
  Mask target;
};

struct CornerTrainConfig {
  CornerNetConfig net;
  AdamOptions adam;
  std::int64_t iterations = 2000;
  int batch_size = 8;
  bool augment = true;
  std::uint64_t seed = 0;
  int log_interval = 100;
};

struct CornerTrainResult {
  CornerNet<float> net;
  std::vector<std::pair<std::int64_t, double>> log;  // (iteration, BCE)
};

/// BCE training of channel 0 against the target maps. Samples must share
/// one size. Deterministic for a fixed config.
CornerTrainResult train_corner_net(const CornerTrainConfig& config, const std::vector<CornerSample>& samples,
                                   const std::function<void(std::int64_t, double)>& on_log = {});

}  // namespace fforge
