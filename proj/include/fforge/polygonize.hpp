#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fforge/geometry.hpp"
#include "fforge/raster.hpp"

namespace fforge {

struct PixelPos {
  int row = 0;
  int col = 0;

  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

inline Point to_point(PixelPos p) { return {static_cast<double>(p.col), static_cast<double>(p.row)}; }

/// Corner probabilities in [0,1], same layout as a mask.
using CornerMap = Mask;

/// Closed chain of boundary pixels, in tracing order. A pixel may repeat
/// where the region is one pixel thin.
struct RingChain {
  std::vector<PixelPos> pixels;
  bool outer = true;
};

/// Moore-neighbor tracing of one binary region (values > 0.5). The outer
/// ring comes first and runs clockwise from the first foreground pixel in
/// raster order; hole rings follow, counter-clockwise, ordered by the first
/// pixel of each hole. Holes are 4-connected background components that do
/// not touch the raster border.
std::vector<RingChain> trace_rings(const Mask& region);

/// Local maxima of a corner map above `threshold` under 3x3 non-maximum
/// suppression. Among equal values the first in raster order survives.
std::vector<PixelPos> corner_candidates(const CornerMap& map, float threshold);

/// Snaps each candidate to the nearest ring pixel (first in ring order on
/// ties) when it lies within `snap_radius`, merges duplicates, and returns
/// the snapped pixels in ring order.
std::vector<PixelPos> order_and_snap(std::span<const PixelPos> candidates, const RingChain& ring, double snap_radius);

/// Candidates taken from `corners` with corner_candidates.
std::vector<PixelPos> order_and_snap(const CornerMap& corners, const RingChain& ring, float threshold,
                                     double snap_radius = 2.0);

/// Removes the vertex closest to the segment joining its two neighbours if
/// that distance is below `dist_threshold` and more than 3 vertices remain.
/// Returns the removed index.
std::optional<std::size_t> filter_near_edge_step(std::vector<Point>& ring, double dist_threshold);

/// Repeats filter_near_edge_step until nothing is removed.
std::vector<Point> filter_near_edge(std::vector<Point> ring, double dist_threshold);

struct PolygonizeParams {
  float instance_threshold = 0.5f;
  float corner_threshold = 0.5f;
  double dist_threshold = 2.0;
  int min_area = 16;
  double snap_radius = 2.0;
  int crop_margin = 4;

  void validate() const;
};

/// Produces a corner map for an instance crop. `crop` has both dimensions
/// divisible by 4; `origin` is its top-left pixel in the full mask (possibly
/// negative when the crop reaches past the border).
class CornerDetector {
 public:
  virtual ~CornerDetector() = default;
  [[nodiscard]] virtual CornerMap detect(const Mask& crop, PixelPos origin) const = 0;
};

/// Serves windows of one precomputed full-size map.
class FixedCornerMap final : public CornerDetector {
 public:
  explicit FixedCornerMap(CornerMap map) : map_(std::move(map)) {}
  [[nodiscard]] CornerMap detect(const Mask& crop, PixelPos origin) const override;

 private:
  CornerMap map_;
};

/// Per-instance polygons of a segmentation, ordered by instance id. Instances
/// smaller than `min_area` are skipped; rings with fewer than 3 snapped
/// corners fall back to Douglas-Peucker with `dist_threshold`.
std::vector<Polygon> extract_polygons(const Mask& mask, const CornerDetector& detector,
                                      const PolygonizeParams& params = {});

}  // namespace fforge
