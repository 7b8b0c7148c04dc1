#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fforge/corner_net.hpp"
#include "fforge/geometry.hpp"
#include "fforge/trainer.hpp"

namespace fforge {

/// Random rectilinear footprints on a square canvas, plus a degraded
/// segmentation and a rendered image for each.
struct SynthParams {
  int size = 32;
  int min_vertices = 4;
  int max_vertices = 16;
  int max_rectangles = 3;     // overlapping rectangles per shape; two more when aiming above 8 vertices
  double min_extent = 0.3;    // side of the first rectangle, as a fraction of size
  double max_extent = 0.7;
  int min_edge = 4;           // shortest allowed polygon edge in pixels
  double hole_probability = 0.2;
  double rotation_probability = 0.25;
  double max_rotation_deg = 30.0;
  double blur_sigma_min = 1.5;
  double blur_sigma_max = 2.5;
  double noise_amplitude = 0.3;  // low-frequency threshold noise
  int noise_cell = 5;
  double speckle_rate = 0.005;
  double image_noise = 0.03;

  void validate() const;
};

/// Pixel-edge boundaries of a binary raster as rings through pixel corners
/// (half-integer coordinates), collinear points merged. Clockwise rings are
/// outer boundaries, counter-clockwise ones are holes. Throws when two
/// pixels touch only diagonally, where the boundary is ambiguous.
std::vector<Ring> crack_boundaries(const Mask& mask);

struct SynthShape {
  Polygon polygon;  // continuous footprint
  Mask ideal;       // its pixel-center rasterization
};

SynthShape random_shape(std::mt19937_64& rng, const SynthParams& params);

/// Blurred, noise-thresholded and speckled copy of an ideal mask. Never empty.
Mask corrupt_mask(const Mask& ideal, std::mt19937_64& rng, const SynthParams& params);

/// Flat-colored footprint on a flat background with Gaussian noise.
IntensityImage render_image(const Mask& ideal, std::mt19937_64& rng, const SynthParams& params);

struct SynthItem {
  std::string name;
  Polygon polygon;
  IntensityImage image;
  Mask seg;
  Mask ideal;
  Mask corners;
};

std::vector<SynthItem> generate_synthetic(int count, std::uint64_t seed, const SynthParams& params = {});

/// Writes image/, seg/, ideal/, corners/ PNGs and manifest.json.
void write_synthetic(const std::string& dir, const std::vector<SynthItem>& items, std::uint64_t seed,
                     const SynthParams& params);

/// Reads a directory written by write_synthetic.
std::vector<SynthItem> read_synthetic(const std::string& dir);

Dataset to_training_set(const std::vector<SynthItem>& items);
std::vector<CornerSample> to_corner_set(const std::vector<SynthItem>& items);

}  // namespace fforge
