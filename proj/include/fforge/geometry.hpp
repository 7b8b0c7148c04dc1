#pragma once

#include <span>
#include <string>
#include <vector>

#include "fforge/raster.hpp"

namespace fforge {

/// Pixel-center coordinates: pixel (row r, col c) sits at x = c, y = r.
struct Point {
  double x = 0;
  double y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

using Ring = std::vector<Point>;

/// One outer ring (clockwise on screen) and any number of inner rings
/// (counter-clockwise). Rings are stored open: first != last.
struct Polygon {
  Ring outer;
  std::vector<Ring> inner;
  int instance_id = 0;

  [[nodiscard]] std::size_t vertex_count() const {
    std::size_t n = outer.size();
    for (const auto& r : inner) n += r.size();
    return n;
  }
};

/// Shoelace area with y flipped to point up, so a ring that runs clockwise
/// on screen (y down) has negative area.
double signed_area(std::span<const Point> ring);

inline bool is_clockwise(std::span<const Point> ring) { return signed_area(ring) < 0.0; }

double point_segment_distance(const Point& p, const Point& a, const Point& b);

/// Distance from p to the closed polyline through `ring`.
double distance_to_ring(const Point& p, std::span<const Point> ring);

/// Even-odd test against one closed ring.
bool inside_ring(const Point& p, std::span<const Point> ring);

/// Douglas-Peucker on a closed ring: splits at the vertex farthest from the
/// first one and simplifies both halves with `tolerance`.
Ring douglas_peucker_closed(std::span<const Point> ring, double tolerance);

/// Pixels whose centers are inside the polygon (outer minus holes), plus
/// those lying on or within `outset` of any ring. Vertices sit on pixel
/// centers, so the outline pixels themselves are filled.
Mask rasterize_polygon(const Polygon& polygon, int width, int height, double outset = 0.0);

/// Symmetric Hausdorff distance between a closed polyline and a point set.
/// The polyline is sampled every `step` units.
double hausdorff_distance(std::span<const Point> ring, std::span<const Point> points, double step = 0.1);

/// "POLYGON ((x y, ...), (...))" with closed rings.
std::string to_wkt(const Polygon& polygon);

}  // namespace fforge
