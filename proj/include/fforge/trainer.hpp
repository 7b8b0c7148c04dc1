#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fforge/gan.hpp"

namespace fforge {

/// One (image, segmentation, ideal) training triple.
struct Sample {
  std::string name;
  IntensityImage image;
  Mask seg;
  Mask ideal;
};

using Dataset = std::vector<Sample>;

struct TrainConfig {
  NetConfig net;
  LossWeights weights;  // delta and epsilon are overridden by `schedule`
  RampSchedule schedule;
  KernelParams potts_kernel;
  KernelParams ncut_kernel;
  ObjectiveOptions objective;
  AdamOptions adam;
  std::int64_t iterations = 140000;
  int batch_size = 4;
  int patch_size = 256;
  bool augment = true;
  std::uint64_t seed = 0;
  int log_interval = 100;
  int checkpoint_interval = 0;  // 0 disables checkpoints
  std::string checkpoint_dir;
};

struct TrainLogRow {
  std::int64_t iteration = 0;
  LossBreakdown generator;
  double discriminator = 0;
  double delta = 0;
  double epsilon = 0;
};

/// Raised when a loss turns non-finite; the message carries the per-term
/// breakdown of the failing iteration.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  RegularizerGan<float> gan;
  std::vector<TrainLogRow> log;
};

/// CSV header of the training log.
inline constexpr const char* kTrainLogHeader = "iter,L_GAN,L_D,L_recG,L_recR,L_potts,L_ncut,delta,epsilon";
std::string format_log_row(const TrainLogRow& row);

/// Draws `batch_size` random patches (with random rotation/flip when enabled)
/// and builds their affinity matrices.
Batch<float> assemble_batch(const Dataset& data, const TrainConfig& config, std::mt19937_64& rng);

/// Alternates one discriminator step and one joint E_G/E_R/F step per
/// iteration. Deterministic for a fixed config and dataset.
TrainResult train_regularizer(const TrainConfig& config, const Dataset& data,
                              const std::function<void(const TrainLogRow&)>& on_log = {});

}  // namespace fforge
