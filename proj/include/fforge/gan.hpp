#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fforge/adam.hpp"
#include "fforge/affinity.hpp"
#include "fforge/losses.hpp"
#include "fforge/model_bundle.hpp"
#include "fforge/nn.hpp"
#include "fforge/raster.hpp"

namespace fforge {

struct NetConfig {
  int base_channels = 8;
  int encoder_pools = 2;
  int decoder_residual_blocks = 8;
  int discriminator_pools = 4;
  int k = 2;

  void validate() const {
    if (base_channels <= 0 || encoder_pools < 0 || decoder_residual_blocks < 0 || discriminator_pools < 0 || k < 2) {
      throw std::invalid_argument("NetConfig: invalid sizes");
    }
  }
};

struct LossWeights {
  double alpha = 3.0;
  double beta = 1.0;
  double gamma = 3.0;
  double delta = 0.0;
  double epsilon = 0.0;

  void validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || delta < 0 || epsilon < 0) {
      throw std::invalid_argument("LossWeights: weights must be non-negative");
    }
  }
};

/// Potts/ncut weight ramp: zero before `start`, linear to the maxima at `end`,
/// constant afterwards.
struct RampSchedule {
  std::int64_t start = 40000;
  std::int64_t end = 80000;
  double delta_max = 175.0;
  double epsilon_max = 1.0;

  /// Returns (delta, epsilon) for a zero-based iteration.
  [[nodiscard]] std::pair<double, double> operator()(std::int64_t iteration) const {
    if (iteration < 0) throw std::invalid_argument("ramp_schedule: negative iteration");
    if (iteration < start) return {0.0, 0.0};
    if (iteration >= end) return {delta_max, epsilon_max};
    const double frac = static_cast<double>(iteration - start) / static_cast<double>(end - start);
    return {frac * delta_max, frac * epsilon_max};
  }
};

inline std::pair<double, double> ramp_schedule(std::int64_t iteration, const RampSchedule& schedule = {}) {
  return schedule(iteration);
}

struct ObjectiveOptions {
  bool non_saturating = false;
  bool one_sided_bce = false;
  bool per_pixel_energy = true;  // divide the Potts term by the pixel count
  double ncut_eps = 1e-8;
};

/// One training batch: x (N,1,H,W) segmentation, z (N,3,H,W) image,
/// y (N,1,H,W) ideal mask, and per-sample affinities for the two energies.
template <typename Scalar>
struct Batch {
  Tensor<Scalar> x;
  Tensor<Scalar> z;
  Tensor<Scalar> y;
  std::vector<AffinityMatrix<Scalar>> potts_affinity;
  std::vector<AffinityMatrix<Scalar>> ncut_affinity;
};

struct LossBreakdown {
  double total = 0;
  double gan = 0;
  double rec_g = 0;
  double rec_r = 0;
  double potts = 0;
  double ncut = 0;
};

/// Generator path G = F(E_G(x, z)), reconstruction path R = F(E_R(y)) with a
/// single shared decoder F, and the discriminator D.
template <typename Scalar>
class RegularizerGan {
 public:
  RegularizerGan() = default;
  RegularizerGan(const NetConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    const int top = config.base_channels << config.encoder_pools;
    encoder_g = Encoder<Scalar>("E_G", 4, config.base_channels, config.encoder_pools);
    encoder_r = Encoder<Scalar>("E_R", 1, config.base_channels, config.encoder_pools);
    decoder = Decoder<Scalar>("F", top, config.decoder_residual_blocks, config.encoder_pools, config.k);
    discriminator = Discriminator<Scalar>("D", 1, config.base_channels, config.discriminator_pools);
    std::mt19937_64 rng(seed);
    encoder_g.init(rng);
    encoder_r.init(rng);
    decoder.init(rng);
    discriminator.init(rng);
  }

  [[nodiscard]] const NetConfig& config() const { return config_; }

  /// Channel-softmax output of the generator path for (N,1,H,W) x and (N,3,H,W) z.
  Var generator_forward(Tape<Scalar>& tape, Var x, Var z, Mode mode) {
    check_spatial(tape.shape(x));
    return decoder(tape, encoder_g(tape, concat_channels(tape, x, z), mode), mode);
  }

  /// Channel-softmax output of the reconstruction path for (N,1,H,W) y.
  Var reconstruction_forward(Tape<Scalar>& tape, Var y, Mode mode) {
    check_spatial(tape.shape(y));
    return decoder(tape, encoder_r(tape, y, mode), mode);
  }

  /// D probabilities (N,1,1,1) for single-channel masks.
  Var discriminate(Tape<Scalar>& tape, Var masks, Mode mode) {
    const Shape s = tape.shape(masks);
    const int div = 1 << config_.discriminator_pools;
    if (s.h % div != 0 || s.w % div != 0) {
      throw std::invalid_argument("discriminator: spatial dims must be divisible by " + std::to_string(div));
    }
    return discriminator(tape, masks, mode);
  }

  /// E_G, E_R and F parameters, each exactly once.
  std::vector<Parameter<Scalar>*> generator_parameters() {
    std::vector<Parameter<Scalar>*> out;
    append_parameters<Scalar>(encoder_g, out);
    append_parameters<Scalar>(encoder_r, out);
    append_parameters<Scalar>(decoder, out);
    return out;
  }

  std::vector<Parameter<Scalar>*> discriminator_parameters() {
    std::vector<Parameter<Scalar>*> out;
    append_parameters<Scalar>(discriminator, out);
    return out;
  }

  template <typename V>
  void visit(V&& v) {
    encoder_g.visit(v);
    encoder_r.visit(v);
    decoder.visit(v);
    discriminator.visit(v);
  }

  ModelBundle to_bundle() {
    ModelBundle b;
    b.set_meta("kind", 0);
    b.set_meta("base_channels", config_.base_channels);
    b.set_meta("encoder_pools", config_.encoder_pools);
    b.set_meta("decoder_residual_blocks", config_.decoder_residual_blocks);
    b.set_meta("discriminator_pools", config_.discriminator_pools);
    b.set_meta("k", config_.k);
    export_module(*this, b);
    return b;
  }

  static RegularizerGan from_bundle(const ModelBundle& b) {
    if (b.require_meta("kind") != 0) throw std::runtime_error("ModelBundle does not hold a regularizer");
    NetConfig c;
    c.base_channels = static_cast<int>(b.require_meta("base_channels"));
    c.encoder_pools = static_cast<int>(b.require_meta("encoder_pools"));
    c.decoder_residual_blocks = static_cast<int>(b.require_meta("decoder_residual_blocks"));
    c.discriminator_pools = static_cast<int>(b.require_meta("discriminator_pools"));
    c.k = static_cast<int>(b.require_meta("k"));
    RegularizerGan gan(c, 0);
    import_module(gan, b);
    return gan;
  }

  Encoder<Scalar> encoder_g;
  Encoder<Scalar> encoder_r;
  Decoder<Scalar> decoder;
  Discriminator<Scalar> discriminator;

 private:
  void check_spatial(const Shape& s) const {
    const int div = 1 << config_.encoder_pools;
    if (s.h % div != 0 || s.w % div != 0) {
      throw std::invalid_argument("regularizer: spatial dims " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                                  " must be divisible by " + std::to_string(div));
    }
  }

  NetConfig config_;
};

/// Graph nodes and values of the full objective
/// alpha L_GAN + beta L_recG + gamma L_recR + delta L_Potts + epsilon L_ncut.
struct ObjectiveNodes {
  Var total;
  Var gan;
  Var rec_g;
  Var rec_r;
  Var potts;
  Var ncut;
  LossBreakdown values;
};

template <typename Scalar>
ObjectiveNodes full_objective(Tape<Scalar>& tape, RegularizerGan<Scalar>& gan, const Batch<Scalar>& batch,
                              const LossWeights& weights, const ObjectiveOptions& options = {},
                              Mode mode = Mode::kTrain) {
  weights.validate();
  const int n = batch.x.shape.n;
  const Var x = tape.constant(batch.x);
  const Var z = tape.constant(batch.z);
  const Var y = tape.constant(batch.y);
  const Var s_g = gan.generator_forward(tape, x, z, mode);
  const Var s_r = gan.reconstruction_forward(tape, y, mode);
  const Var fake = select_channel(tape, s_g, 0);
  const Var recon = select_channel(tape, s_r, 0);
  // Fake and reconstructed masks share one discriminator batch.
  const Var d_all = gan.discriminate(tape, concat_batch(tape, {fake, recon}), mode);
  const Var d_fake = slice_batch(tape, d_all, 0, n);

  ObjectiveNodes out;
  out.gan = adversarial_loss_g(tape, d_fake, options.non_saturating);
  out.rec_g = reconstruction_loss(tape, fake, batch.x, options.one_sided_bce);
  out.rec_r = reconstruction_loss(tape, recon, batch.y, options.one_sided_bce);
  out.potts = regularized_energy(tape, s_g, &batch.potts_affinity, EnergyKind::kPotts, options.per_pixel_energy);
  // The normalized cut is already scale free; only Potts is taken per pixel.
  out.ncut = regularized_energy(tape, s_g, &batch.ncut_affinity, EnergyKind::kNcut, false, Scalar(options.ncut_eps));
  out.total = weighted_sum(tape, {out.gan, out.rec_g, out.rec_r, out.potts, out.ncut},
                           {Scalar(weights.alpha), Scalar(weights.beta), Scalar(weights.gamma), Scalar(weights.delta),
                            Scalar(weights.epsilon)});
  out.values.total = static_cast<double>(tape.value(out.total).data[0]);
  out.values.gan = static_cast<double>(tape.value(out.gan).data[0]);
  out.values.rec_g = static_cast<double>(tape.value(out.rec_g).data[0]);
  out.values.rec_r = static_cast<double>(tape.value(out.rec_r).data[0]);
  out.values.potts = static_cast<double>(tape.value(out.potts).data[0]);
  out.values.ncut = static_cast<double>(tape.value(out.ncut).data[0]);
  return out;
}

/// Discriminator loss on detached generator and reconstruction outputs.
/// Returns the graph root and fills `value`.
template <typename Scalar>
Var discriminator_objective(Tape<Scalar>& tape, RegularizerGan<Scalar>& gan, const Batch<Scalar>& batch,
                            double* value, Mode mode = Mode::kTrain) {
  const int n = batch.x.shape.n;
  const Var x = tape.constant(batch.x);
  const Var z = tape.constant(batch.z);
  const Var y = tape.constant(batch.y);
  const Var fake = tape.constant(tape.value(select_channel(tape, gan.generator_forward(tape, x, z, mode), 0)));
  const Var recon = tape.constant(tape.value(select_channel(tape, gan.reconstruction_forward(tape, y, mode), 0)));
  const Var d_all = gan.discriminate(tape, concat_batch(tape, {fake, recon}), mode);
  const Var loss = discriminator_loss(tape, slice_batch(tape, d_all, n, n), slice_batch(tape, d_all, 0, n));
  if (value) *value = static_cast<double>(tape.value(loss).data[0]);
  return loss;
}

/// One Adam step on D. Generator-side parameters are left untouched.
template <typename Scalar>
double discriminator_step(RegularizerGan<Scalar>& gan, const Batch<Scalar>& batch, const AdamOptions& adam) {
  Tape<Scalar> tape;
  double value = 0;
  const Var loss = discriminator_objective(tape, gan, batch, &value);
  tape.backward(loss);
  adam_step(gan.discriminator_parameters(), adam);
  for (auto* p : gan.generator_parameters()) p->zero_grad();
  return value;
}

/// One joint Adam step on E_G, E_R and F. D parameters are left untouched.
template <typename Scalar>
LossBreakdown generator_step(RegularizerGan<Scalar>& gan, const Batch<Scalar>& batch, const LossWeights& weights,
                             const ObjectiveOptions& options, const AdamOptions& adam) {
  Tape<Scalar> tape;
  const ObjectiveNodes obj = full_objective(tape, gan, batch, weights, options);
  tape.backward(obj.total);
  adam_step(gan.generator_parameters(), adam);
  for (auto* p : gan.discriminator_parameters()) p->zero_grad();
  return obj.values;
}

namespace detail {

template <typename Scalar>
Tensor<Scalar> mask_tensor(const Mask& m) {
  Tensor<Scalar> t(Shape{1, 1, m.height(), m.width()});
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c) t.at(0, 0, r, c) = Scalar(m(r, c));
  return t;
}

template <typename Scalar>
Tensor<Scalar> image_tensor(const IntensityImage& img) {
  Tensor<Scalar> t(Shape{1, 3, img.height(), img.width()});
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      for (int ch = 0; ch < 3; ++ch) t.at(0, ch, r, c) = Scalar(img.pixel(r, c)(ch));
  return t;
}

template <typename Scalar>
SoftmaxMask<Scalar> to_softmax_mask(const Tensor<Scalar>& t) {
  return SoftmaxMask<Scalar>(t.sample(0));
}

}  // namespace detail

/// Generator path on a single raster pair.
template <typename Scalar>
SoftmaxMask<Scalar> generator_forward(RegularizerGan<Scalar>& gan, const Mask& x, const IntensityImage& z,
                                      Mode mode = Mode::kEval) {
  if (x.width() != z.width() || x.height() != z.height()) {
    throw std::invalid_argument("generator_forward: x and z dimensions differ");
  }
  Tape<Scalar> tape;
  const Var out = gan.generator_forward(tape, tape.constant(detail::mask_tensor<Scalar>(x)),
                                        tape.constant(detail::image_tensor<Scalar>(z)), mode);
  return detail::to_softmax_mask(tape.value(out));
}

template <typename Scalar>
SoftmaxMask<Scalar> reconstruction_forward(RegularizerGan<Scalar>& gan, const Mask& y, Mode mode = Mode::kEval) {
  Tape<Scalar> tape;
  const Var out = gan.reconstruction_forward(tape, tape.constant(detail::mask_tensor<Scalar>(y)), mode);
  return detail::to_softmax_mask(tape.value(out));
}

/// Channel 0 of the generator output in eval mode, as a probability mask.
template <typename Scalar>
Mask regularize(RegularizerGan<Scalar>& gan, const Mask& x, const IntensityImage& z) {
  const SoftmaxMask<Scalar> s = generator_forward(gan, x, z, Mode::kEval);
  MaskArray values(x.height(), x.width());
  for (int r = 0; r < x.height(); ++r)
    for (int c = 0; c < x.width(); ++c)
      values(r, c) = std::clamp(static_cast<float>(s(0, static_cast<Eigen::Index>(r) * x.width() + c)), 0.0f, 1.0f);
  return Mask(std::move(values));
}

}  // namespace fforge
