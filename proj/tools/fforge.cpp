// Command-line driver: every subcommand forwards to a pipeline function.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fforge/pipeline.hpp"

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Footprint regularization and polygonization"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed (overrides the config)");
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "KEY=VALUE config override, applied after --config");

  std::string out, data, model, image, mask, pred, gt, corner_map;
  int count = 200;
  bool wkt = false;

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--out", out, "output directory")->required();
  synth->add_option("--count", count, "number of samples")->check(CLI::NonNegativeNumber);

  auto* train_reg = app.add_subcommand("train-reg", "train the regularization GAN");
  train_reg->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train_reg->add_option("--out", out, "output directory")->required();

  auto* train_corners = app.add_subcommand("train-corners", "train the corner detector");
  train_corners->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train_corners->add_option("--out", out, "output directory")->required();

  auto* regularize = app.add_subcommand("regularize", "regularize a segmentation mask");
  regularize->add_option("--model", model, "regularizer ModelBundle")->required()->check(CLI::ExistingFile);
  regularize->add_option("--image", image, "RGB image")->required()->check(CLI::ExistingFile);
  regularize->add_option("--mask", mask, "segmentation mask")->required()->check(CLI::ExistingFile);
  regularize->add_option("--out", out, "output mask (.png or .pgm)")->required();

  auto* polygonize = app.add_subcommand("polygonize", "extract building polygons");
  auto* model_opt = polygonize->add_option("--model", model, "corner net ModelBundle")->check(CLI::ExistingFile);
  auto* map_opt =
      polygonize->add_option("--corner-map", corner_map, "precomputed corner map (instead of --model)")
          ->check(CLI::ExistingFile);
  model_opt->excludes(map_opt);
  polygonize->add_option("--mask", mask, "regularized mask")->required()->check(CLI::ExistingFile);
  polygonize->add_option("--out", out, "output GeoJSON (or WKT with --wkt)")->required();
  polygonize->add_flag("--wkt", wkt, "write one WKT polygon per line");

  auto* eval = app.add_subcommand("eval", "IoU and accuracy per tile");
  eval->add_option("--pred", pred, "predicted masks")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--gt", gt, "ground-truth masks")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", out, "CSV report")->required();

  auto* energy = app.add_subcommand("energy", "print potts,ncut for a mask");
  energy->add_option("--image", image, "RGB image")->required()->check(CLI::ExistingFile);
  energy->add_option("--mask", mask, "soft or binary mask")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    fforge::PipelineConfig config = config_path.empty() ? fforge::PipelineConfig{} : fforge::load_config(config_path);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects KEY=VALUE, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) config.seed = *seed;
    config.propagate_seed();
    config.validate();

    if (*synth) {
      fforge::run_synth(config, count, out);
    } else if (*train_reg) {
      fforge::run_train_reg(config, data, out, &std::cout);
    } else if (*train_corners) {
      fforge::run_train_corners(config, data, out, &std::cout);
    } else if (*regularize) {
      fforge::run_regularize(model, image, mask, out);
    } else if (*polygonize) {
      if (!model.empty()) {
        fforge::run_polygonize(model, mask, out, config.polygonize, wkt);
      } else if (!corner_map.empty()) {
        fforge::run_polygonize_with_map(corner_map, mask, out, config.polygonize, wkt);
      } else {
        throw std::invalid_argument("polygonize needs --model or --corner-map");
      }
    } else if (*eval) {
      fforge::run_eval(pred, gt, out, config.eval_threshold, config.exclude_empty_tiles);
    } else if (*energy) {
      std::cout << fforge::energy_line(fforge::load_image(image), fforge::load_mask(mask), config.train.potts_kernel,
                                       config.train.ncut_kernel)
                << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
