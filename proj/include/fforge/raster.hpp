#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace fforge {

using MaskArray = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PixelArray = Eigen::Array<float, Eigen::Dynamic, 3, Eigen::RowMajor>;
using LabelArray = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Single-channel raster with values in [0,1]. Probability maps and hard
/// masks share this type.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, float fill = 0.0f);
  explicit Mask(MaskArray values);

  [[nodiscard]] int width() const { return static_cast<int>(values_.cols()); }
  [[nodiscard]] int height() const { return static_cast<int>(values_.rows()); }
  [[nodiscard]] bool empty() const { return values_.size() == 0; }

  float operator()(int row, int col) const { return values_(row, col); }
  float& operator()(int row, int col) { return values_(row, col); }

  [[nodiscard]] const MaskArray& values() const { return values_; }
  MaskArray& values() { return values_; }

  /// Throws if any value lies outside [0,1].
  void validate() const;

  friend bool operator==(const Mask& a, const Mask& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           (a.values_ == b.values_).all();
  }

 private:
  MaskArray values_;
};

/// Three-channel raster with interleaved values in [0,1]. Row `r*width+c` of
/// `pixels()` is the RGB triple of pixel (r, c).
class IntensityImage {
 public:
  IntensityImage() = default;
  IntensityImage(int width, int height, float fill = 0.0f);
  IntensityImage(int width, int height, PixelArray pixels);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] bool empty() const { return pixels_.rows() == 0; }

  [[nodiscard]] const PixelArray& pixels() const { return pixels_; }
  PixelArray& pixels() { return pixels_; }

  auto pixel(int row, int col) { return pixels_.row(static_cast<Eigen::Index>(row) * width_ + col); }
  auto pixel(int row, int col) const { return pixels_.row(static_cast<Eigen::Index>(row) * width_ + col); }

  void validate() const;

  friend bool operator==(const IntensityImage& a, const IntensityImage& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && (a.pixels_ == b.pixels_).all();
  }

 private:
  int width_ = 0;
  int height_ = 0;
  PixelArray pixels_;
};

/// Instance labels: 0 is background, 1..count are 8-connected components.
struct InstanceLabeling {
  LabelArray labels;
  int count = 0;

  [[nodiscard]] int width() const { return static_cast<int>(labels.cols()); }
  [[nodiscard]] int height() const { return static_cast<int>(labels.rows()); }
};

struct PatchSample {
  IntensityImage image;
  Mask seg;
  Mask ideal;
  int row = 0;
  int col = 0;
};

enum class RasterKind { kImage, kMask };

struct Extent {
  int width = 0;
  int height = 0;
};

// I/O. Masks accept 8-bit grayscale; images accept 8-bit grayscale or RGB.
// Supported containers: PNG and binary PGM (P5) / PPM (P6) with maxval 255.
Mask load_mask(const std::string& path, std::optional<Extent> expect = std::nullopt);
IntensityImage load_image(const std::string& path, std::optional<Extent> expect = std::nullopt);

/// Writes as PNG or PGM depending on the extension. Values are scaled by 255
/// and rounded to nearest.
void save_mask(const Mask& mask, const std::string& path);
void save_image(const IntensityImage& image, const std::string& path);

/// 8-connected labeling of pixels strictly above `threshold`, in scan order.
InstanceLabeling connected_components(const Mask& mask, float threshold = 0.5f);

/// Uniformly random `size`x`size` crop shared by the three rasters.
PatchSample sample_patch(const IntensityImage& image, const Mask& seg, const Mask& ideal, int size,
                         std::uint64_t rng_seed);

struct Augmentation {
  enum class Kind { kRot90, kFlipH, kFlipV };
  Kind kind = Kind::kRot90;
  int quarter_turns = 1;  // used by kRot90

  static Augmentation rot90(int k) { return {Kind::kRot90, k}; }
  static Augmentation flip_h() { return {Kind::kFlipH, 0}; }
  static Augmentation flip_v() { return {Kind::kFlipV, 0}; }
};

/// Rotation maps pixel (r, c) to (c, H-1-r) per quarter turn (clockwise on
/// screen); flip_h mirrors columns, flip_v mirrors rows.
PatchSample augment(const PatchSample& patch, Augmentation op);
Mask augment(const Mask& mask, Augmentation op);
IntensityImage augment(const IntensityImage& image, Augmentation op);

}  // namespace fforge
