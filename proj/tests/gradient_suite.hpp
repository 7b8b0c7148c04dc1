#pragma once

// Gradient checks shared by the unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "fforge/gan.hpp"
#include "fforge/losses.hpp"
#include "fforge/nn.hpp"
#include "gradcheck.hpp"

namespace fforge::testing {

struct NamedReport {
  std::string name;
  GradCheckReport report;
};

inline IntensityImage random_image(int w, int h, std::mt19937_64& rng) {
  IntensityImage img(w, h);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch) img.pixel(r, c)(ch) = u(rng);
  return img;
}

/// Values bounded away from zero so ReLU kinks stay out of reach of the step.
inline Tensor<double> off_zero_tensor(Shape s, std::mt19937_64& rng) {
  Tensor<double> t = random_tensor(s, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (Eigen::Index i = 0; i < t.data.size(); ++i)
    if (sign(rng)) t.data[i] = -t.data[i];
  return t;
}

inline std::vector<NamedReport> layer_gradient_reports(double step = 1e-4) {
  std::vector<NamedReport> out;
  std::mt19937_64 rng(2024);
  GradCheck gc;

  auto with_head = [&](Shape s) { return random_tensor(s, rng); };

  {
    Tensor<double> x = random_tensor({2, 3, 6, 6}, rng);
    Conv2d<double> conv("conv3", 3, 4, 3);
    conv.init(rng);
    conv.bias.value = random_tensor(conv.bias.value.shape, rng);
    const Tensor<double> w = with_head({2, 4, 6, 6});
    out.push_back({"conv2d 3x3", gc.run([&](Tape<double>& t, GradCheck& g) {
                     g.module(conv);
                     return dot(t, conv(t, g.input(t, "x", x)), w);
                   }, step)});
  }
  {
    Tensor<double> x = random_tensor({1, 4, 5, 5}, rng);
    Conv2d<double> conv("conv1", 4, 2, 1);
    conv.init(rng);
    const Tensor<double> w = with_head({1, 2, 5, 5});
    out.push_back({"conv2d 1x1", gc.run([&](Tape<double>& t, GradCheck& g) {
                     g.module(conv);
                     return dot(t, conv(t, g.input(t, "x", x)), w);
                   }, step)});
  }
  {
    Tensor<double> x = random_tensor({3, 2, 5, 5}, rng);
    BatchNorm2d<double> bn("bn", 2);
    bn.gamma.value = random_tensor(bn.gamma.value.shape, rng, 0.5, 1.5);
    bn.beta.value = random_tensor(bn.beta.value.shape, rng);
    const Tensor<double> w = with_head({3, 2, 5, 5});
    out.push_back({"batch_norm train", gc.run([&](Tape<double>& t, GradCheck& g) {
                     g.param(bn.gamma);
                     g.param(bn.beta);
                     return dot(t, batch_norm(t, g.input(t, "x", x), bn, Mode::kTrain), w);
                   }, step)});
    out.push_back({"batch_norm eval", gc.run([&](Tape<double>& t, GradCheck& g) {
                     g.param(bn.gamma);
                     g.param(bn.beta);
                     return dot(t, batch_norm(t, g.input(t, "x", x), bn, Mode::kEval), w);
                   }, step)});
  }
  {
    Tensor<double> x = random_tensor({2, 2, 6, 6}, rng);
    const Tensor<double> w = with_head({2, 2, 3, 3});
    out.push_back({"max_pool2", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, max_pool2(t, g.input(t, "x", x)), w);
                   }, step)});
  }
  {
    Tensor<double> x = random_tensor({1, 2, 4, 4}, rng);
    const Tensor<double> w = with_head({1, 2, 8, 8});
    out.push_back({"upsample2", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, upsample2(t, g.input(t, "x", x)), w);
                   }, step)});
  }
  {
    Tensor<double> x = off_zero_tensor({2, 2, 4, 4}, rng);
    const Tensor<double> w = with_head({2, 2, 4, 4});
    out.push_back({"relu", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, relu(t, g.input(t, "x", x)), w);
                   }, step)});
    out.push_back({"sigmoid", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, sigmoid(t, g.input(t, "x", x)), w);
                   }, step)});
  }
  {
    Tensor<double> x = random_tensor({2, 3, 4, 4}, rng, -2, 2);
    const Tensor<double> w = with_head({2, 3, 4, 4});
    out.push_back({"softmax_channels", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, softmax_channels(t, g.input(t, "x", x)), w);
                   }, step)});
  }
  {
    Tensor<double> a = random_tensor({2, 2, 4, 4}, rng);
    Tensor<double> b = random_tensor({2, 2, 4, 4}, rng);
    Tensor<double> c = random_tensor({1, 2, 4, 4}, rng);
    Tensor<double> d = random_tensor({2, 1, 4, 4}, rng);
    const Tensor<double> w2 = with_head({2, 2, 4, 4});
    out.push_back({"add", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, add(t, g.input(t, "a", a), g.input(t, "b", b)), w2);
                   }, step)});
    const Tensor<double> w3 = with_head({3, 2, 4, 4});
    out.push_back({"concat_batch", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, concat_batch(t, {g.input(t, "a", a), g.input(t, "c", c)}), w3);
                   }, step)});
    const Tensor<double> w1 = with_head({1, 2, 4, 4});
    out.push_back({"slice_batch", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, slice_batch(t, g.input(t, "a", a), 1, 1), w1);
                   }, step)});
    const Tensor<double> wc = with_head({2, 3, 4, 4});
    out.push_back({"concat_channels", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, concat_channels(t, g.input(t, "a", a), g.input(t, "d", d)), wc);
                   }, step)});
    const Tensor<double> ws = with_head({2, 1, 4, 4});
    out.push_back({"select_channel", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, select_channel(t, g.input(t, "a", a), 1), ws);
                   }, step)});
    const Tensor<double> wg = with_head({2, 2, 1, 1});
    out.push_back({"global_avg_pool", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return dot(t, global_avg_pool(t, g.input(t, "a", a)), wg);
                   }, step)});
    const Tensor<double> wa = with_head({2, 2, 4, 4});
    const Tensor<double> wb = with_head({2, 2, 4, 4});
    out.push_back({"weighted_sum", gc.run([&](Tape<double>& t, GradCheck& g) {
                     const Var l1 = dot(t, g.input(t, "a", a), wa);
                     const Var l2 = dot(t, g.input(t, "b", b), wb);
                     return weighted_sum(t, {l1, l2}, {2.5, -0.75});
                   }, step)});
  }
  {
    Tensor<double> p = random_tensor({4, 1, 1, 1}, rng, 0.05, 0.95);
    Tensor<double> q = random_tensor({4, 1, 1, 1}, rng, 0.05, 0.95);
    out.push_back({"adversarial_loss_g", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return adversarial_loss_g(t, g.input(t, "d", p));
                   }, step)});
    out.push_back({"adversarial_loss_g non-saturating", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return adversarial_loss_g(t, g.input(t, "d", p), true);
                   }, step)});
    out.push_back({"discriminator_loss", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return discriminator_loss(t, g.input(t, "recon", p), g.input(t, "fake", q));
                   }, step)});
  }
  {
    Tensor<double> p = random_tensor({2, 1, 4, 4}, rng, 0.05, 0.95);
    Tensor<double> target = random_tensor({2, 1, 4, 4}, rng, 0.0, 1.0);
    out.push_back({"reconstruction_loss", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return reconstruction_loss(t, g.input(t, "p", p), target);
                   }, step)});
    out.push_back({"reconstruction_loss one-sided", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return reconstruction_loss(t, g.input(t, "p", p), target, true);
                   }, step)});
  }
  {
    const int n = 2, side = 6;
    std::vector<AffinityMatrix<double>> w;
    for (int i = 0; i < n; ++i) w.push_back(build_affinity<double>(random_image(side, side, rng), KernelParams{0.3, 2.0, 3}));
    Tensor<double> s = random_tensor({n, 2, side, side}, rng, 0.0, 1.0);
    out.push_back({"potts energy", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return regularized_energy(t, g.input(t, "S", s), &w, EnergyKind::kPotts);
                   }, step)});
    out.push_back({"ncut energy", gc.run([&](Tape<double>& t, GradCheck& g) {
                     return regularized_energy(t, g.input(t, "S", s), &w, EnergyKind::kNcut, false);
                   }, step)});
  }
  {
    Tensor<double> x = random_tensor({2, 2, 4, 4}, rng);
    ResidualBlock<double> block("res", 2);
    block.init(rng);
    const Tensor<double> w = with_head({2, 2, 4, 4});
    out.push_back({"residual block", gc.run([&](Tape<double>& t, GradCheck& g) {
                     g.module(block);
                     return dot(t, block(t, g.input(t, "x", x), Mode::kTrain), w);
                   }, step)});
  }
  return out;
}

/// Micro regularizer GAN on a batch of two side x side samples (D pools three times).
inline GradCheckReport full_objective_report(double step = 1e-4, int max_entries = 6, int side = 8) {
  std::mt19937_64 rng(77);
  NetConfig net;
  net.base_channels = 2;
  net.encoder_pools = 2;
  net.decoder_residual_blocks = 1;
  net.discriminator_pools = 3;
  RegularizerGan<double> gan(net, 5);
  const int n = 2;
  Batch<double> batch;
  batch.x = Tensor<double>({n, 1, side, side});
  batch.y = Tensor<double>({n, 1, side, side});
  batch.z = random_tensor({n, 3, side, side}, rng, 0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index i = 0; i < batch.x.data.size(); ++i) {
    batch.x.data[i] = coin(rng);
    batch.y.data[i] = coin(rng);
  }
  for (int i = 0; i < n; ++i) {
    IntensityImage img(side, side);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c)
        for (int ch = 0; ch < 3; ++ch) img.pixel(r, c)(ch) = static_cast<float>(batch.z.at(i, ch, r, c));
    batch.potts_affinity.push_back(build_affinity<double>(img, KernelParams{}));
    batch.ncut_affinity.push_back(build_affinity<double>(img, KernelParams{}));
  }
  LossWeights weights;
  weights.delta = 175.0;
  weights.epsilon = 1.0;
  GradCheck gc;
  return gc.run(
      [&](Tape<double>& t, GradCheck& g) {
        g.module(gan);
        return full_objective(t, gan, batch, weights).total;
      },
      step, max_entries);
}

}  // namespace fforge::testing
