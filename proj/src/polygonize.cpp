#include "fforge/polygonize.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

#include "fforge/parallel.hpp"

namespace fforge {

namespace {

// Clockwise on screen, starting north.
constexpr std::array<int, 8> kDr{-1, -1, 0, 1, 1, 1, 0, -1};
constexpr std::array<int, 8> kDc{0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(PixelPos from, PixelPos to) {
  for (int d = 0; d < 8; ++d)
    if (from.row + kDr[d] == to.row && from.col + kDc[d] == to.col) return d;
  throw std::logic_error("trace_rings: backtrack is not a neighbour");
}

struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<unsigned char> fg;

  [[nodiscard]] bool at(int r, int c) const {
    return r >= 0 && c >= 0 && r < rows && c < cols && fg[static_cast<std::size_t>(r * cols + c)];
  }
};

struct Step {
  PixelPos next;
  PixelPos backtrack;
};

std::optional<Step> moore_step(const Grid& g, PixelPos p, PixelPos b) {
  const int d0 = direction_of(p, b);
  for (int i = 1; i <= 8; ++i) {
    const int d = (d0 + i) % 8;
    const PixelPos q{p.row + kDr[d], p.col + kDc[d]};
    if (g.at(q.row, q.col)) {
      const int pd = (d0 + i + 7) % 8;
      return Step{q, PixelPos{p.row + kDr[pd], p.col + kDc[pd]}};
    }
  }
  return std::nullopt;
}

std::vector<PixelPos> trace(const Grid& g, PixelPos start, PixelPos backtrack) {
  std::vector<PixelPos> chain{start};
  const auto first = moore_step(g, start, backtrack);
  if (!first) return chain;
  const std::size_t limit = 4 * g.fg.size() + 8;
  PixelPos p = first->next;
  PixelPos b = first->backtrack;
  while (chain.size() < limit) {
    if (p == start) {
      const auto again = moore_step(g, p, b);
      if (again && again->next == first->next) break;
    }
    chain.push_back(p);
    const auto s = moore_step(g, p, b);
    p = s->next;
    b = s->backtrack;
  }
  return chain;
}

double chain_area(const std::vector<PixelPos>& chain) {
  std::vector<Point> pts;
  pts.reserve(chain.size());
  for (const PixelPos& p : chain) pts.push_back(to_point(p));
  return signed_area(pts);
}

void orient(std::vector<PixelPos>& chain, bool clockwise) {
  const double a = chain_area(chain);
  if ((clockwise && a > 0) || (!clockwise && a < 0)) std::reverse(chain.begin() + 1, chain.end());
}

}  // namespace

std::vector<RingChain> trace_rings(const Mask& region) {
  // One pixel of background padding keeps the outside connected.
  Grid g;
  g.rows = region.height() + 2;
  g.cols = region.width() + 2;
  g.fg.assign(static_cast<std::size_t>(g.rows * g.cols), 0);
  bool any = false;
  for (int r = 0; r < region.height(); ++r)
    for (int c = 0; c < region.width(); ++c)
      if (region(r, c) > 0.5f) {
        g.fg[static_cast<std::size_t>((r + 1) * g.cols + c + 1)] = 1;
        any = true;
      }
  std::vector<RingChain> rings;
  if (!any) return rings;

  std::vector<int> bg(g.fg.size(), -1);
  std::vector<PixelPos> firsts;
  std::vector<int> stack;
  for (int i = 0; i < static_cast<int>(g.fg.size()); ++i) {
    if (g.fg[static_cast<std::size_t>(i)] || bg[static_cast<std::size_t>(i)] >= 0) continue;
    const int label = static_cast<int>(firsts.size());
    firsts.push_back({i / g.cols, i % g.cols});
    bg[static_cast<std::size_t>(i)] = label;
    stack.push_back(i);
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      const int r = k / g.cols, c = k % g.cols;
      const std::array<std::pair<int, int>, 4> nb{{{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}}};
      for (auto [nr, nc] : nb) {
        if (nr < 0 || nc < 0 || nr >= g.rows || nc >= g.cols) continue;
        const auto j = static_cast<std::size_t>(nr * g.cols + nc);
        if (g.fg[j] || bg[j] >= 0) continue;
        bg[j] = label;
        stack.push_back(static_cast<int>(j));
      }
    }
  }

  auto unpad = [](std::vector<PixelPos> chain) {
    for (auto& p : chain) {
      --p.row;
      --p.col;
    }
    return chain;
  };

  PixelPos start{};
  for (int i = 0; i < static_cast<int>(g.fg.size()); ++i)
    if (g.fg[static_cast<std::size_t>(i)]) {
      start = {i / g.cols, i % g.cols};
      break;
    }
  auto outer = trace(g, start, {start.row, start.col - 1});
  orient(outer, true);
  rings.push_back({unpad(std::move(outer)), true});

  // Label 0 holds the padding, so every later label is a hole.
  for (std::size_t h = 1; h < firsts.size(); ++h) {
    const PixelPos q = firsts[h];
    const PixelPos s{q.row - 1, q.col};
    auto chain = trace(g, s, q);
    orient(chain, false);
    rings.push_back({unpad(std::move(chain)), false});
  }
  return rings;
}

std::vector<PixelPos> corner_candidates(const CornerMap& map, float threshold) {
  std::vector<PixelPos> out;
  const int h = map.height(), w = map.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const float v = map(r, c);
      if (!(v > threshold)) continue;
      bool peak = true;
      for (int dr = -1; dr <= 1 && peak; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (!dr && !dc) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
          const float u = map(rr, cc);
          const bool earlier = dr < 0 || (dr == 0 && dc < 0);
          if (u > v || (u == v && earlier)) {
            peak = false;
            break;
          }
        }
      }
      if (peak) out.push_back({r, c});
    }
  }
  return out;
}

std::vector<PixelPos> order_and_snap(std::span<const PixelPos> candidates, const RingChain& ring, double snap_radius) {
  std::vector<std::size_t> hits;
  const double r2 = snap_radius * snap_radius;
  for (const PixelPos& cand : candidates) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    for (std::size_t i = 0; i < ring.pixels.size(); ++i) {
      const double dr = ring.pixels[i].row - cand.row;
      const double dc = ring.pixels[i].col - cand.col;
      const double d = dr * dr + dc * dc;
      if (d < best) {
        best = d;
        index = i;
      }
    }
    if (best <= r2 + 1e-9) hits.push_back(index);
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::vector<PixelPos> out;
  for (std::size_t i : hits) {
    // A thin part of the region visits the same pixel twice.
    if (std::find(out.begin(), out.end(), ring.pixels[i]) == out.end()) out.push_back(ring.pixels[i]);
  }
  return out;
}

std::vector<PixelPos> order_and_snap(const CornerMap& corners, const RingChain& ring, float threshold,
                                     double snap_radius) {
  if (!(threshold > 0.0f && threshold < 1.0f)) throw std::invalid_argument("order_and_snap: threshold must be in (0,1)");
  const std::vector<PixelPos> candidates = corner_candidates(corners, threshold);
  return order_and_snap(candidates, ring, snap_radius);
}

std::optional<std::size_t> filter_near_edge_step(std::vector<Point>& ring, double dist_threshold) {
  const std::size_t n = ring.size();
  if (n <= 3) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = point_segment_distance(ring[i], ring[(i + n - 1) % n], ring[(i + 1) % n]);
    if (d < best) {
      best = d;
      index = i;
    }
  }
  if (!(best < dist_threshold)) return std::nullopt;
  ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(index));
  return index;
}

std::vector<Point> filter_near_edge(std::vector<Point> ring, double dist_threshold) {
  while (filter_near_edge_step(ring, dist_threshold)) {
  }
  return ring;
}

void PolygonizeParams::validate() const {
  if (!(instance_threshold > 0.0f && instance_threshold < 1.0f)) {
    throw std::invalid_argument("polygonize: instance threshold must be in (0,1)");
  }
  if (!(corner_threshold >= 0.0f && corner_threshold < 1.0f)) {
    throw std::invalid_argument("polygonize: corner threshold must be in [0,1)");
  }
  if (!(dist_threshold >= 0.0) || !(snap_radius >= 0.0) || min_area < 0 || crop_margin < 1) {
    throw std::invalid_argument("polygonize: invalid parameters");
  }
}

CornerMap FixedCornerMap::detect(const Mask& crop, PixelPos origin) const {
  CornerMap out(crop.width(), crop.height());
  for (int r = 0; r < crop.height(); ++r)
    for (int c = 0; c < crop.width(); ++c) {
      const int rr = r + origin.row, cc = c + origin.col;
      if (rr >= 0 && cc >= 0 && rr < map_.height() && cc < map_.width()) out(r, c) = map_(rr, cc);
    }
  return out;
}

namespace {

Ring ring_points(const std::vector<PixelPos>& pixels, PixelPos origin) {
  Ring out;
  out.reserve(pixels.size());
  for (const PixelPos& p : pixels)
    out.push_back({static_cast<double>(p.col + origin.col), static_cast<double>(p.row + origin.row)});
  return out;
}

}  // namespace

std::vector<Polygon> extract_polygons(const Mask& mask, const CornerDetector& detector, const PolygonizeParams& params) {
  params.validate();
  mask.validate();
  const InstanceLabeling inst = connected_components(mask, params.instance_threshold);

  struct Box {
    int r0 = std::numeric_limits<int>::max(), c0 = std::numeric_limits<int>::max(), r1 = -1, c1 = -1;
    int area = 0;
  };
  std::vector<Box> boxes(static_cast<std::size_t>(inst.count));
  for (int r = 0; r < inst.height(); ++r)
    for (int c = 0; c < inst.width(); ++c) {
      const int l = inst.labels(r, c);
      if (!l) continue;
      Box& b = boxes[static_cast<std::size_t>(l - 1)];
      b.r0 = std::min(b.r0, r);
      b.c0 = std::min(b.c0, c);
      b.r1 = std::max(b.r1, r);
      b.c1 = std::max(b.c1, c);
      ++b.area;
    }

  std::vector<std::optional<Polygon>> results(boxes.size());
  parallel_for(inst.count, [&](int i) {
    const Box& b = boxes[static_cast<std::size_t>(i)];
    if (b.area < params.min_area) return;
    const int m = params.crop_margin;
    const PixelPos origin{b.r0 - m, b.c0 - m};
    const int h = (b.r1 - b.r0 + 1 + 2 * m + 3) / 4 * 4;
    const int w = (b.c1 - b.c0 + 1 + 2 * m + 3) / 4 * 4;
    Mask crop(w, h);
    for (int r = b.r0; r <= b.r1; ++r)
      for (int c = b.c0; c <= b.c1; ++c)
        if (inst.labels(r, c) == i + 1) crop(r - origin.row, c - origin.col) = 1.0f;

    const CornerMap corners = detector.detect(crop, origin);
    if (corners.width() != w || corners.height() != h) {
      throw std::runtime_error("polygonize: corner map size differs from the crop");
    }
    const std::vector<PixelPos> candidates = corner_candidates(corners, params.corner_threshold);

    Polygon poly;
    poly.instance_id = i + 1;
    for (const RingChain& chain : trace_rings(crop)) {
      const std::vector<PixelPos> snapped = order_and_snap(candidates, chain, params.snap_radius);
      Ring ring = snapped.size() >= 3 ? filter_near_edge(ring_points(snapped, origin), params.dist_threshold)
                                      : douglas_peucker_closed(ring_points(chain.pixels, origin), params.dist_threshold);
      if (ring.size() < 3 || signed_area(ring) == 0.0) {
        if (chain.outer) return;  // a line or a point
        continue;
      }
      if (is_clockwise(ring) != chain.outer) std::reverse(ring.begin() + 1, ring.end());
      if (chain.outer) {
        poly.outer = std::move(ring);
      } else {
        poly.inner.push_back(std::move(ring));
      }
    }
    results[static_cast<std::size_t>(i)] = std::move(poly);
  });

  std::vector<Polygon> out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  return out;
}

}  // namespace fforge
