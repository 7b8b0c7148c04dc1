#include "fforge/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fforge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + text + "'");
}

struct Binding {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
std::string show(T v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }
}

template <typename T, typename Access>
Binding bind(Access access) {
  return {[access](PipelineConfig& c, const std::string& key, const std::string& text) {
            if constexpr (std::is_same_v<T, bool>) {
              access(c) = parse_bool(key, text);
            } else {
              access(c) = parse_number<T>(key, text);
            }
          },
          [access](const PipelineConfig& c) { return show<T>(access(const_cast<PipelineConfig&>(c))); }};
}

#define FIELD(T, expr) bind<T>([](PipelineConfig& c) -> T& { return c.expr; })

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = {
      {"seed", FIELD(std::uint64_t, seed)},
      {"eval_threshold", FIELD(float, eval_threshold)},
      {"exclude_empty_tiles", FIELD(bool, exclude_empty_tiles)},
      {"alpha", FIELD(double, train.weights.alpha)},
      {"beta", FIELD(double, train.weights.beta)},
      {"gamma", FIELD(double, train.weights.gamma)},
      {"ramp_start", FIELD(std::int64_t, train.schedule.start)},
      {"ramp_end", FIELD(std::int64_t, train.schedule.end)},
      {"delta_max", FIELD(double, train.schedule.delta_max)},
      {"epsilon_max", FIELD(double, train.schedule.epsilon_max)},
      {"potts_sigma_rgb", FIELD(double, train.potts_kernel.sigma_rgb)},
      {"potts_sigma_xy", FIELD(double, train.potts_kernel.sigma_xy)},
      {"potts_radius", FIELD(int, train.potts_kernel.radius)},
      {"ncut_sigma_rgb", FIELD(double, train.ncut_kernel.sigma_rgb)},
      {"ncut_sigma_xy", FIELD(double, train.ncut_kernel.sigma_xy)},
      {"ncut_radius", FIELD(int, train.ncut_kernel.radius)},
      {"base_channels", FIELD(int, train.net.base_channels)},
      {"encoder_pools", FIELD(int, train.net.encoder_pools)},
      {"decoder_residual_blocks", FIELD(int, train.net.decoder_residual_blocks)},
      {"discriminator_pools", FIELD(int, train.net.discriminator_pools)},
      {"k", FIELD(int, train.net.k)},
      {"non_saturating", FIELD(bool, train.objective.non_saturating)},
      {"one_sided_bce", FIELD(bool, train.objective.one_sided_bce)},
      {"per_pixel_energy", FIELD(bool, train.objective.per_pixel_energy)},
      {"ncut_eps", FIELD(double, train.objective.ncut_eps)},
      {"lr", FIELD(double, train.adam.lr)},
      {"adam_beta1", FIELD(double, train.adam.beta1)},
      {"adam_beta2", FIELD(double, train.adam.beta2)},
      {"adam_eps", FIELD(double, train.adam.eps)},
      {"iterations", FIELD(std::int64_t, train.iterations)},
      {"batch_size", FIELD(int, train.batch_size)},
      {"patch_size", FIELD(int, train.patch_size)},
      {"augment", FIELD(bool, train.augment)},
      {"log_interval", FIELD(int, train.log_interval)},
      {"checkpoint_interval", FIELD(int, train.checkpoint_interval)},
      {"corner_base_channels", FIELD(int, corners.net.base_channels)},
      {"corner_pools", FIELD(int, corners.net.pools)},
      {"corner_residual_blocks", FIELD(int, corners.net.residual_blocks)},
      {"corner_lr", FIELD(double, corners.adam.lr)},
      {"corner_iterations", FIELD(std::int64_t, corners.iterations)},
      {"corner_batch_size", FIELD(int, corners.batch_size)},
      {"corner_augment", FIELD(bool, corners.augment)},
      {"corner_log_interval", FIELD(int, corners.log_interval)},
      {"instance_threshold", FIELD(float, polygonize.instance_threshold)},
      {"corner_threshold", FIELD(float, polygonize.corner_threshold)},
      {"dist_threshold", FIELD(double, polygonize.dist_threshold)},
      {"min_area", FIELD(int, polygonize.min_area)},
      {"snap_radius", FIELD(double, polygonize.snap_radius)},
      {"crop_margin", FIELD(int, polygonize.crop_margin)},
      {"synth_size", FIELD(int, synth.size)},
      {"synth_min_vertices", FIELD(int, synth.min_vertices)},
      {"synth_max_vertices", FIELD(int, synth.max_vertices)},
      {"synth_max_rectangles", FIELD(int, synth.max_rectangles)},
      {"synth_min_extent", FIELD(double, synth.min_extent)},
      {"synth_max_extent", FIELD(double, synth.max_extent)},
      {"synth_min_edge", FIELD(int, synth.min_edge)},
      {"synth_hole_probability", FIELD(double, synth.hole_probability)},
      {"synth_rotation_probability", FIELD(double, synth.rotation_probability)},
      {"synth_max_rotation_deg", FIELD(double, synth.max_rotation_deg)},
      {"synth_blur_sigma_min", FIELD(double, synth.blur_sigma_min)},
      {"synth_blur_sigma_max", FIELD(double, synth.blur_sigma_max)},
      {"synth_noise_amplitude", FIELD(double, synth.noise_amplitude)},
      {"synth_noise_cell", FIELD(int, synth.noise_cell)},
      {"synth_speckle_rate", FIELD(double, synth.speckle_rate)},
      {"synth_image_noise", FIELD(double, synth.image_noise)},
  };
  return table;
}

#undef FIELD

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto it = bindings().find(key);
  if (it == bindings().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second.set(*this, key, value);
}

void PipelineConfig::propagate_seed() {
  train.seed = seed;
  corners.seed = seed;
}

std::string PipelineConfig::to_text() const {
  std::string out;
  for (const auto& [key, b] : bindings()) out += key + " = " + b.get(*this) + "\n";
  return out;
}

void PipelineConfig::validate() const {
  train.weights.validate();
  train.net.validate();
  train.potts_kernel.validate();
  train.ncut_kernel.validate();
  corners.net.validate();
  polygonize.validate();
  synth.validate();
  if (train.schedule.delta_max < 0 || train.schedule.epsilon_max < 0) {
    throw std::invalid_argument("config: schedule maxima must be non-negative");
  }
  if (train.schedule.end <= train.schedule.start || train.schedule.start < 0) {
    throw std::invalid_argument("config: ramp_end must exceed ramp_start >= 0");
  }
  if (train.batch_size <= 0 || train.patch_size <= 0 || train.log_interval <= 0 || train.iterations < 0) {
    throw std::invalid_argument("config: training sizes must be positive");
  }
  if (corners.batch_size <= 0 || corners.log_interval <= 0 || corners.iterations < 0) {
    throw std::invalid_argument("config: corner training sizes must be positive");
  }
  if (!(train.adam.lr > 0) || !(corners.adam.lr > 0)) throw std::invalid_argument("config: learning rates must be positive");
  if (!(eval_threshold > 0.0f && eval_threshold < 1.0f)) throw std::invalid_argument("config: eval_threshold must be in (0,1)");
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(number) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config: line " + std::to_string(number) + ": empty key or value");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  PipelineConfig config;
  for (const auto& [key, value] : parse_key_values(in)) config.set(key, value);
  config.propagate_seed();
  config.validate();
  return config;
}

}  // namespace fforge
