#include "fforge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "json.hpp"

namespace fforge {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string geojson_text(const std::vector<Polygon>& polygons) {
  json features = json::array();
  auto ring_json = [](const Ring& ring) {
    json out = json::array();
    for (std::size_t i = 0; i <= ring.size(); ++i) {
      const Point& p = ring[i % ring.size()];
      out.push_back({p.x, p.y});
    }
    return out;
  };
  for (const Polygon& poly : polygons) {
    json coords = json::array();
    coords.push_back(ring_json(poly.outer));
    for (const Ring& r : poly.inner) coords.push_back(ring_json(r));
    features.push_back({{"type", "Feature"},
                        {"properties", {{"instance_id", poly.instance_id}}},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(coords)}}}});
  }
  const json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

std::string wkt_text(const std::vector<Polygon>& polygons) {
  std::string out;
  for (const Polygon& p : polygons) out += to_wkt(p) + "\n";
  return out;
}

void run_synth(const PipelineConfig& config, int count, const std::string& out_dir) {
  config.synth.validate();
  write_synthetic(out_dir, generate_synthetic(count, config.seed, config.synth), config.seed, config.synth);
}

void run_train_reg(const PipelineConfig& config, const std::string& data_dir, const std::string& out_dir,
                   std::ostream* log) {
  config.validate();
  const Dataset data = to_training_set(read_synthetic(data_dir));
  fs::create_directories(out_dir);
  TrainConfig train = config.train;
  train.seed = config.seed;
  if (train.checkpoint_interval > 0) train.checkpoint_dir = (fs::path(out_dir) / "checkpoints").string();
  std::string csv = std::string(kTrainLogHeader) + "\n";
  if (log) *log << kTrainLogHeader << '\n';
  TrainResult result = train_regularizer(train, data, [&](const TrainLogRow& row) {
    csv += format_log_row(row) + "\n";
    if (log) *log << format_log_row(row) << std::endl;
  });
  ModelBundle bundle = result.gan.to_bundle();
  bundle.set_meta("seed", static_cast<double>(config.seed));
  bundle.save((fs::path(out_dir) / "model.ffrg").string());
  write_text((fs::path(out_dir) / "loss.csv").string(), csv);
  write_text((fs::path(out_dir) / "config.txt").string(), config.to_text());
}

void run_train_corners(const PipelineConfig& config, const std::string& data_dir, const std::string& out_dir,
                       std::ostream* log) {
  config.validate();
  const std::vector<CornerSample> samples = to_corner_set(read_synthetic(data_dir));
  fs::create_directories(out_dir);
  CornerTrainConfig train = config.corners;
  train.seed = config.seed;
  std::string csv = "iter,bce\n";
  if (log) *log << "iter,bce\n";
  CornerTrainResult result = train_corner_net(train, samples, [&](std::int64_t it, double bce) {
    char line[64];
    std::snprintf(line, sizeof line, "%lld,%.9g\n", static_cast<long long>(it), bce);
    csv += line;
    if (log) *log << line << std::flush;
  });
  ModelBundle bundle = result.net.to_bundle();
  bundle.set_meta("seed", static_cast<double>(config.seed));
  bundle.save((fs::path(out_dir) / "corners.ffrg").string());
  write_text((fs::path(out_dir) / "corner_loss.csv").string(), csv);
  write_text((fs::path(out_dir) / "config.txt").string(), config.to_text());
}

Mask regularize_any(RegularizerGan<float>& gan, const Mask& mask, const IntensityImage& image) {
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw std::invalid_argument("regularize: image and mask dimensions differ");
  }
  const int div = 1 << gan.config().encoder_pools;
  const int h = mask.height(), w = mask.width();
  const int ph = (h + div - 1) / div * div, pw = (w + div - 1) / div * div;
  if (ph == h && pw == w) return regularize(gan, mask, image);
  Mask m(pw, ph);
  IntensityImage img(pw, ph);
  for (int r = 0; r < ph; ++r)
    for (int c = 0; c < pw; ++c) {
      const int sr = std::min(r, h - 1), sc = std::min(c, w - 1);
      if (r < h && c < w) m(r, c) = mask(r, c);
      img.pixel(r, c) = image.pixel(sr, sc);
    }
  const Mask full = regularize(gan, m, img);
  return Mask(MaskArray(full.values().topLeftCorner(h, w)));
}

void run_regularize(const std::string& model, const std::string& image, const std::string& mask,
                    const std::string& out) {
  RegularizerGan<float> gan = RegularizerGan<float>::from_bundle(ModelBundle::load(model));
  const IntensityImage img = load_image(image);
  const Mask m = load_mask(mask, Extent{img.width(), img.height()});
  save_mask(regularize_any(gan, m, img), out);
}

std::vector<Polygon> polygonize_mask(const Mask& mask, const ModelBundle& corner_model, const PolygonizeParams& params) {
  const CornerNetDetector detector(corner_model);
  return extract_polygons(mask, detector, params);
}

void run_polygonize(const std::string& model, const std::string& mask, const std::string& out,
                    const PolygonizeParams& params, bool wkt) {
  const ModelBundle bundle = ModelBundle::load(model);
  const std::vector<Polygon> polys = polygonize_mask(load_mask(mask), bundle, params);
  write_text(out, wkt ? wkt_text(polys) : geojson_text(polys));
}

void run_polygonize_with_map(const std::string& corner_map, const std::string& mask, const std::string& out,
                             const PolygonizeParams& params, bool wkt) {
  const Mask m = load_mask(mask);
  const FixedCornerMap detector(load_mask(corner_map, Extent{m.width(), m.height()}));
  const std::vector<Polygon> polys = extract_polygons(m, detector, params);
  write_text(out, wkt ? wkt_text(polys) : geojson_text(polys));
}

namespace {

std::vector<fs::path> raster_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("eval: not a directory: " + dir);
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir, float threshold,
                         bool exclude_empty_tiles) {
  std::vector<EvalRow> rows;
  for (const fs::path& gt_path : raster_files(gt_dir)) {
    const fs::path pred_path = fs::path(pred_dir) / gt_path.filename();
    if (!fs::exists(pred_path)) throw std::runtime_error("eval: missing prediction " + pred_path.string());
    const Mask gt = load_mask(gt_path.string());
    const Mask pred = load_mask(pred_path.string(), Extent{gt.width(), gt.height()});
    if (exclude_empty_tiles && (gt.values() > threshold).count() == 0 && (pred.values() > threshold).count() == 0) {
      continue;
    }
    rows.push_back({gt_path.stem().string(), iou(pred, gt, threshold), accuracy(pred, gt, threshold)});
  }
  return aggregate(std::move(rows));
}

void run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out_csv, float threshold,
              bool exclude_empty_tiles) {
  write_text(out_csv, format_csv(evaluate_dirs(pred_dir, gt_dir, threshold, exclude_empty_tiles)));
}

std::string energy_line(const IntensityImage& image, const Mask& mask, const KernelParams& potts,
                        const KernelParams& ncut) {
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw std::invalid_argument("energy: image and mask dimensions differ");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(mask.width()) * mask.height();
  SoftmaxMask<double> s(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(0, i) = mask.values().data()[i];
    s(1, i) = 1.0 - s(0, i);
  }
  const double e_potts = potts_energy(s, build_affinity<double>(image, potts)).energy;
  const double e_ncut = ncut_energy(s, build_affinity<double>(image, ncut)).energy;
  char line[96];
  std::snprintf(line, sizeof line, "%.17g,%.17g", e_potts, e_ncut);
  return line;
}

}  // namespace fforge
