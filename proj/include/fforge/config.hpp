#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "fforge/corner_net.hpp"
#include "fforge/polygonize.hpp"
#include "fforge/synth.hpp"
#include "fforge/trainer.hpp"

namespace fforge {

/// Every tunable of the pipeline. Loaded from `key = value` lines; '#'
/// starts a comment. Unknown keys are errors.
struct PipelineConfig {
  TrainConfig train;
  CornerTrainConfig corners;
  PolygonizeParams polygonize;
  SynthParams synth;
  std::uint64_t seed = 0;
  float eval_threshold = 0.5f;
  bool exclude_empty_tiles = false;  // skip tiles where both masks are empty

  void validate() const;

  /// Applies one setting; throws std::invalid_argument on an unknown key or
  /// a malformed value.
  void set(const std::string& key, const std::string& value);

  /// Copies `seed` into the training configs.
  void propagate_seed();

  /// Canonical `key = value` text of every setting, sorted by key.
  [[nodiscard]] std::string to_text() const;
};

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);

PipelineConfig load_config(const std::string& path);

}  // namespace fforge
