#include "fforge/raster.hpp"

#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fforge {

Mask::Mask(int width, int height, float fill) : values_(MaskArray::Constant(height, width, fill)) {
  if (width < 0 || height < 0) throw std::invalid_argument("Mask: negative dimensions");
}

Mask::Mask(MaskArray values) : values_(std::move(values)) {}

void Mask::validate() const {
  if (values_.size() > 0 && (values_.minCoeff() < 0.0f || values_.maxCoeff() > 1.0f || values_.hasNaN())) {
    throw std::invalid_argument("Mask: values must lie in [0,1]");
  }
}

IntensityImage::IntensityImage(int width, int height, float fill)
    : width_(width), height_(height), pixels_(PixelArray::Constant(static_cast<Eigen::Index>(width) * height, 3, fill)) {
  if (width < 0 || height < 0) throw std::invalid_argument("IntensityImage: negative dimensions");
}

IntensityImage::IntensityImage(int width, int height, PixelArray pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.rows() != static_cast<Eigen::Index>(width) * height) {
    throw std::invalid_argument("IntensityImage: pixel count does not match dimensions");
  }
}

void IntensityImage::validate() const {
  if (pixels_.size() > 0 && (pixels_.minCoeff() < 0.0f || pixels_.maxCoeff() > 1.0f || pixels_.hasNaN())) {
    throw std::invalid_argument("IntensityImage: values must lie in [0,1]");
  }
}

InstanceLabeling connected_components(const Mask& mask, float threshold) {
  if (!(threshold > 0.0f && threshold < 1.0f)) {
    throw std::invalid_argument("connected_components: threshold must lie in (0,1)");
  }
  const int h = mask.height();
  const int w = mask.width();
  InstanceLabeling out;
  out.labels = LabelArray::Zero(h, w);
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (out.labels(r, c) != 0 || !(mask(r, c) > threshold)) continue;
      const int label = ++out.count;
      out.labels(r, c) = label;
      stack.emplace_back(r, c);
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr;
            const int nc = pc + dc;
            if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
            if (out.labels(nr, nc) != 0 || !(mask(nr, nc) > threshold)) continue;
            out.labels(nr, nc) = label;
            stack.emplace_back(nr, nc);
          }
        }
      }
    }
  }
  return out;
}

namespace {

IntensityImage crop(const IntensityImage& img, int row, int col, int size) {
  IntensityImage out(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) out.pixel(r, c) = img.pixel(row + r, col + c);
  return out;
}

Mask crop(const Mask& m, int row, int col, int size) {
  return Mask(MaskArray(m.values().block(row, col, size, size)));
}

// Source pixel feeding destination (r, c) of an h x w output.
std::pair<int, int> source_of(int r, int c, int h, int w, const Augmentation& op, int turns) {
  switch (op.kind) {
    case Augmentation::Kind::kFlipH:
      return {r, w - 1 - c};
    case Augmentation::Kind::kFlipV:
      return {h - 1 - r, c};
    case Augmentation::Kind::kRot90:
      break;
  }
  // Forward map (r, c) -> (c, n-1-r); invert `turns` times on a square grid.
  const int n = h;
  int sr = r;
  int sc = c;
  for (int t = 0; t < turns; ++t) {
    const int pr = n - 1 - sc;
    const int pc = sr;
    sr = pr;
    sc = pc;
  }
  return {sr, sc};
}

int normalized_turns(const Augmentation& op) { return ((op.quarter_turns % 4) + 4) % 4; }

void require_square(int w, int h) {
  if (w != h) throw std::invalid_argument("augment: rotation requires a square raster");
}

}  // namespace

PatchSample sample_patch(const IntensityImage& image, const Mask& seg, const Mask& ideal, int size,
                         std::uint64_t rng_seed) {
  const int w = image.width();
  const int h = image.height();
  if (seg.width() != w || seg.height() != h || ideal.width() != w || ideal.height() != h) {
    throw std::invalid_argument("sample_patch: rasters must share dimensions");
  }
  if (size <= 0 || w < size || h < size) {
    throw std::invalid_argument("sample_patch: raster " + std::to_string(w) + "x" + std::to_string(h) +
                                " is smaller than patch size " + std::to_string(size));
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<int> rows(0, h - size);
  std::uniform_int_distribution<int> cols(0, w - size);
  PatchSample out;
  out.row = rows(rng);
  out.col = cols(rng);
  out.image = crop(image, out.row, out.col, size);
  out.seg = crop(seg, out.row, out.col, size);
  out.ideal = crop(ideal, out.row, out.col, size);
  return out;
}

Mask augment(const Mask& mask, Augmentation op) {
  const int h = mask.height();
  const int w = mask.width();
  if (op.kind == Augmentation::Kind::kRot90) require_square(w, h);
  const int turns = normalized_turns(op);
  Mask out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto [sr, sc] = source_of(r, c, h, w, op, turns);
      out(r, c) = mask(sr, sc);
    }
  }
  return out;
}

IntensityImage augment(const IntensityImage& image, Augmentation op) {
  const int h = image.height();
  const int w = image.width();
  if (op.kind == Augmentation::Kind::kRot90) require_square(w, h);
  const int turns = normalized_turns(op);
  IntensityImage out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const auto [sr, sc] = source_of(r, c, h, w, op, turns);
      out.pixel(r, c) = image.pixel(sr, sc);
    }
  }
  return out;
}

PatchSample augment(const PatchSample& patch, Augmentation op) {
  PatchSample out;
  out.image = augment(patch.image, op);
  out.seg = augment(patch.seg, op);
  out.ideal = augment(patch.ideal, op);
  out.row = patch.row;
  out.col = patch.col;
  return out;
}

}  // namespace fforge
