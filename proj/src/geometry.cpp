#include "fforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fforge {

double signed_area(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    acc += a.x * (-b.y) - b.x * (-a.y);
  }
  return 0.5 * acc;
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double distance_to_ring(const Point& p, std::span<const Point> ring) {
  if (ring.empty()) return std::numeric_limits<double>::infinity();
  if (ring.size() == 1) return std::hypot(p.x - ring[0].x, p.y - ring[0].y);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
  }
  return best;
}

bool inside_ring(const Point& p, std::span<const Point> ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

namespace {

void dp_open(std::span<const Point> pts, std::size_t first, std::size_t last, double tol, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double best = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > best) {
      best = d;
      index = i;
    }
  }
  if (best > tol) {
    keep[index] = true;
    dp_open(pts, first, index, tol, keep);
    dp_open(pts, index, last, tol, keep);
  }
}

}  // namespace

Ring douglas_peucker_closed(std::span<const Point> ring, double tolerance) {
  const std::size_t n = ring.size();
  if (n < 3) return Ring(ring.begin(), ring.end());
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = std::hypot(ring[i].x - ring[0].x, ring[i].y - ring[0].y);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  // Unroll the ring so that both halves are open chains ending at index 0 again.
  std::vector<Point> pts(ring.begin(), ring.end());
  pts.push_back(ring[0]);
  std::vector<bool> keep(pts.size(), false);
  keep[0] = true;
  keep[far] = true;
  dp_open(pts, 0, far, tolerance, keep);
  dp_open(pts, far, pts.size() - 1, tolerance, keep);
  Ring out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

Mask rasterize_polygon(const Polygon& polygon, int width, int height, double outset) {
  Mask out(width, height);
  if (polygon.outer.size() < 3) return out;
  double min_x = polygon.outer[0].x, max_x = min_x, min_y = polygon.outer[0].y, max_y = min_y;
  for (const Point& p : polygon.outer) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int c0 = std::max(0, static_cast<int>(std::floor(min_x - outset)));
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(max_x + outset)));
  const int r0 = std::max(0, static_cast<int>(std::floor(min_y - outset)));
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(max_y + outset)));
  const double tol = outset + 1e-9;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const Point p{static_cast<double>(c), static_cast<double>(r)};
      bool filled = inside_ring(p, polygon.outer);
      for (const Ring& hole : polygon.inner)
        if (filled && inside_ring(p, hole)) filled = false;
      if (!filled) {
        filled = distance_to_ring(p, polygon.outer) <= tol;
        for (const Ring& hole : polygon.inner)
          if (!filled && distance_to_ring(p, hole) <= tol) filled = true;
      }
      if (filled) out(r, c) = 1.0f;
    }
  }
  return out;
}

double hausdorff_distance(std::span<const Point> ring, std::span<const Point> points, double step) {
  double worst = 0.0;
  for (const Point& p : points) worst = std::max(worst, distance_to_ring(p, ring));
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int samples = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int s = 0; s <= samples; ++s) {
      const double t = static_cast<double>(s) / samples;
      const Point q{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
      double best = std::numeric_limits<double>::infinity();
      for (const Point& p : points) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
      worst = std::max(worst, best);
    }
  }
  return worst;
}

std::string to_wkt(const Polygon& polygon) {
  std::ostringstream os;
  os.precision(10);
  auto ring = [&](const Ring& r) {
    os << '(';
    for (std::size_t i = 0; i <= r.size(); ++i) {
      const Point& p = r[i % r.size()];
      if (i) os << ", ";
      os << p.x << ' ' << p.y;
    }
    os << ')';
  };
  os << "POLYGON (";
  ring(polygon.outer);
  for (const Ring& h : polygon.inner) {
    os << ", ";
    ring(h);
  }
  os << ')';
  return os.str();
}

}  // namespace fforge
