#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fforge/config.hpp"
#include "fforge/metrics.hpp"

namespace fforge {

// Library side of every CLI subcommand. Each run_* writes exactly what the
// corresponding subcommand writes.

/// GeoJSON FeatureCollection in pixel coordinates; rings are closed and the
/// first ring is the exterior. Each feature carries `instance_id`.
std::string geojson_text(const std::vector<Polygon>& polygons);

/// One WKT polygon per line.
std::string wkt_text(const std::vector<Polygon>& polygons);

/// Writes the dataset for `count` shapes drawn with `config.seed`.
void run_synth(const PipelineConfig& config, int count, const std::string& out_dir);

/// Trains on `data_dir` and writes model.ffrg, loss.csv and config.txt into
/// `out_dir` (plus checkpoints/ when enabled). Progress rows go to `log`.
void run_train_reg(const PipelineConfig& config, const std::string& data_dir, const std::string& out_dir,
                   std::ostream* log = nullptr);

/// Trains the corner net on the ideal masks of `data_dir`; writes
/// corners.ffrg, corner_loss.csv and config.txt into `out_dir`.
void run_train_corners(const PipelineConfig& config, const std::string& data_dir, const std::string& out_dir,
                       std::ostream* log = nullptr);

/// Regularized mask of any size: inputs are zero/edge padded up to the
/// network's divisor and the result cropped back.
Mask regularize_any(RegularizerGan<float>& gan, const Mask& mask, const IntensityImage& image);

void run_regularize(const std::string& model, const std::string& image, const std::string& mask,
                    const std::string& out);

std::vector<Polygon> polygonize_mask(const Mask& mask, const ModelBundle& corner_model, const PolygonizeParams& params);

/// Writes GeoJSON, or WKT lines when `wkt` is set.
void run_polygonize(const std::string& model, const std::string& mask, const std::string& out,
                    const PolygonizeParams& params, bool wkt = false);

/// Same, with corners read from a precomputed full-size corner map raster.
void run_polygonize_with_map(const std::string& corner_map, const std::string& mask, const std::string& out,
                             const PolygonizeParams& params, bool wkt = false);

/// Pairs PNG/PGM files by name across the two directories.
EvalReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir, float threshold,
                         bool exclude_empty_tiles = false);

void run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out_csv, float threshold,
              bool exclude_empty_tiles = false);

/// "potts,ncut" for the two-channel labeling (mask, 1 - mask), evaluated
/// in double without normalization.
std::string energy_line(const IntensityImage& image, const Mask& mask, const KernelParams& potts,
                        const KernelParams& ncut);

void write_text(const std::string& path, const std::string& text);

}  // namespace fforge
