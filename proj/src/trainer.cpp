#include "fforge/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "fforge/parallel.hpp"

namespace fforge {
namespace {

struct PatchPlan {
  std::size_t index = 0;
  std::uint64_t crop_seed = 0;
  int turns = 0;
  bool flip = false;
};

bool same_kernel(const KernelParams& a, const KernelParams& b) {
  return a.sigma_rgb == b.sigma_rgb && a.sigma_xy == b.sigma_xy && a.radius == b.radius;
}

std::string breakdown_text(std::int64_t it, const LossBreakdown& b, double d_loss) {
  std::ostringstream os;
  os << "non-finite loss at iteration " << it << ": total=" << b.total << " L_GAN=" << b.gan << " L_recG=" << b.rec_g
     << " L_recR=" << b.rec_r << " L_potts=" << b.potts << " L_ncut=" << b.ncut << " L_D=" << d_loss;
  return os.str();
}

}  // namespace

std::string format_log_row(const TrainLogRow& row) {
  std::ostringstream os;
  os.precision(9);
  os << row.iteration << ',' << row.generator.gan << ',' << row.discriminator << ',' << row.generator.rec_g << ','
     << row.generator.rec_r << ',' << row.generator.potts << ',' << row.generator.ncut << ',' << row.delta << ','
     << row.epsilon;
  return os.str();
}

Batch<float> assemble_batch(const Dataset& data, const TrainConfig& config, std::mt19937_64& rng) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const int n = config.batch_size;
  const int size = config.patch_size;
  std::vector<PatchPlan> plan(static_cast<std::size_t>(n));
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_int_distribution<int> turns(0, 3);
  std::bernoulli_distribution flip(0.5);
  for (auto& p : plan) {
    p.index = pick(rng);
    p.crop_seed = rng();
    if (config.augment) {
      p.turns = turns(rng);
      p.flip = flip(rng);
    }
  }

  Batch<float> batch;
  batch.x = Tensor<float>(Shape{n, 1, size, size});
  batch.z = Tensor<float>(Shape{n, 3, size, size});
  batch.y = Tensor<float>(Shape{n, 1, size, size});
  batch.potts_affinity.resize(static_cast<std::size_t>(n));
  batch.ncut_affinity.resize(static_cast<std::size_t>(n));
  const bool shared = same_kernel(config.potts_kernel, config.ncut_kernel);

  parallel_for(n, [&](int i) {
    const PatchPlan& p = plan[static_cast<std::size_t>(i)];
    const Sample& s = data[p.index];
    PatchSample patch = sample_patch(s.image, s.seg, s.ideal, size, p.crop_seed);
    if (p.turns != 0) patch = augment(patch, Augmentation::rot90(p.turns));
    if (p.flip) patch = augment(patch, Augmentation::flip_h());
    batch.x.sample(i) = detail::mask_tensor<float>(patch.seg).sample(0);
    batch.y.sample(i) = detail::mask_tensor<float>(patch.ideal).sample(0);
    batch.z.sample(i) = detail::image_tensor<float>(patch.image).sample(0);
    const auto idx = static_cast<std::size_t>(i);
    batch.potts_affinity[idx] = build_affinity<float>(patch.image, config.potts_kernel);
    batch.ncut_affinity[idx] =
        shared ? batch.potts_affinity[idx] : build_affinity<float>(patch.image, config.ncut_kernel);
  });
  return batch;
}

TrainResult train_regularizer(const TrainConfig& config, const Dataset& data,
                              const std::function<void(const TrainLogRow&)>& on_log) {
  if (config.batch_size <= 0 || config.iterations < 0 || config.log_interval <= 0) {
    throw std::invalid_argument("train: batch_size and log_interval must be positive");
  }
  std::mt19937_64 rng(config.seed);
  TrainResult result{RegularizerGan<float>(config.net, rng()), {}};
  if (config.checkpoint_interval > 0 && !config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
  }

  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const Batch<float> batch = assemble_batch(data, config, rng);
    const auto [delta, epsilon] = config.schedule(it);
    LossWeights weights = config.weights;
    weights.delta = delta;
    weights.epsilon = epsilon;

    const double d_loss = discriminator_step(result.gan, batch, config.adam);
    const LossBreakdown g = generator_step(result.gan, batch, weights, config.objective, config.adam);
    if (!std::isfinite(g.total) || !std::isfinite(d_loss)) {
      throw TrainingDiverged(breakdown_text(it, g, d_loss));
    }

    if ((it + 1) % config.log_interval == 0) {
      TrainLogRow row{it, g, d_loss, delta, epsilon};
      result.log.push_back(row);
      if (on_log) on_log(row);
    }
    if (config.checkpoint_interval > 0 && !config.checkpoint_dir.empty() && (it + 1) % config.checkpoint_interval == 0) {
      result.gan.to_bundle().save(
          (std::filesystem::path(config.checkpoint_dir) / ("checkpoint_" + std::to_string(it + 1) + ".ffrg")).string());
    }
  }
  return result;
}

}  // namespace fforge
