#include "fforge/corner_net.hpp"

#include <cmath>
#include <limits>

#include "fforge/losses.hpp"

namespace fforge {

CornerMap detect_corners(const Mask& mask, const ModelBundle& corner_model) {
  CornerNet<float> net = CornerNet<float>::from_bundle(corner_model);
  return detect_corners(net, mask);
}

namespace {

bool inside(const Mask& m, int r, int c) {
  return r >= 0 && c >= 0 && r < m.height() && c < m.width() && m(r, c) > 0.5f;
}

bool on_boundary(const Mask& m, int r, int c) {
  return inside(m, r, c) && (!inside(m, r - 1, c) || !inside(m, r + 1, c) || !inside(m, r, c - 1) || !inside(m, r, c + 1));
}

}  // namespace

Mask corner_target(const Mask& mask, std::span<const Point> vertices, double radius) {
  Mask out(mask.width(), mask.height());
  const int reach = static_cast<int>(std::ceil(radius));
  for (const Point& v : vertices) {
    int cr = static_cast<int>(std::lround(v.y)), cc = static_cast<int>(std::lround(v.x));
    double best = std::numeric_limits<double>::infinity();
    for (int r = static_cast<int>(std::floor(v.y)) - 1; r <= static_cast<int>(std::ceil(v.y)) + 1; ++r)
      for (int c = static_cast<int>(std::floor(v.x)) - 1; c <= static_cast<int>(std::ceil(v.x)) + 1; ++c) {
        if (!on_boundary(mask, r, c)) continue;
        const double d = std::hypot(c - v.x, r - v.y);
        if (d < best - 1e-12) {
          best = d;
          cr = r;
          cc = c;
        }
      }
    for (int r = cr - reach; r <= cr + reach; ++r)
      for (int c = cc - reach; c <= cc + reach; ++c) {
        if (r < 0 || c < 0 || r >= mask.height() || c >= mask.width()) continue;
        if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius + 1e-9) out(r, c) = 1.0f;
      }
  }
  return out;
}

CornerTrainResult train_corner_net(const CornerTrainConfig& config, const std::vector<CornerSample>& samples,
                                   const std::function<void(std::int64_t, double)>& on_log) {
  if (samples.empty()) throw std::invalid_argument("train-corners: empty dataset");
  if (config.batch_size <= 0 || config.iterations < 0 || config.log_interval <= 0) {
    throw std::invalid_argument("train-corners: batch_size and log_interval must be positive");
  }
  const int h = samples.front().mask.height(), w = samples.front().mask.width();
  for (const auto& s : samples) {
    if (s.mask.height() != h || s.mask.width() != w || s.target.height() != h || s.target.width() != w) {
      throw std::invalid_argument("train-corners: samples must share one size");
    }
  }
  if (config.augment && h != w) throw std::invalid_argument("train-corners: rotation needs square samples");

  std::mt19937_64 rng(config.seed);
  CornerTrainResult result{CornerNet<float>(config.net, rng()), {}};
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::uniform_int_distribution<int> turns(0, 3);
  std::bernoulli_distribution flip(0.5);
  const int n = config.batch_size;

  for (std::int64_t it = 0; it < config.iterations; ++it) {
    Tensor<float> x(Shape{n, 1, h, w});
    Tensor<float> t(Shape{n, 1, h, w});
    for (int i = 0; i < n; ++i) {
      const CornerSample& s = samples[pick(rng)];
      Mask m = s.mask, target = s.target;
      if (config.augment) {
        const int k = turns(rng);
        const bool f = flip(rng);
        if (k) {
          m = augment(m, Augmentation::rot90(k));
          target = augment(target, Augmentation::rot90(k));
        }
        if (f) {
          m = augment(m, Augmentation::flip_h());
          target = augment(target, Augmentation::flip_h());
        }
      }
      x.sample(i) = detail::mask_tensor<float>(m).sample(0);
      t.sample(i) = detail::mask_tensor<float>(target).sample(0);
    }
    Tape<float> tape;
    const Var prob = select_channel(tape, result.net.forward(tape, tape.constant(x), Mode::kTrain), 0);
    const Var loss = reconstruction_loss(tape, prob, t);
    const double value = tape.value(loss).data[0];
    if (!std::isfinite(value)) throw std::runtime_error("train-corners: non-finite loss at iteration " + std::to_string(it));
    tape.backward(loss);
    adam_step(result.net.parameters(), config.adam);
    if ((it + 1) % config.log_interval == 0) {
      result.log.emplace_back(it, value);
      if (on_log) on_log(it, value);
    }
  }
  return result;
}

}  // namespace fforge
