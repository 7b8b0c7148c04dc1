#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fforge/corner_net.hpp"
#include "fforge/metrics.hpp"
#include "fforge/polygonize.hpp"
#include "fforge/synth.hpp"
#include "test_util.hpp"

using namespace fforge;
using fforge::testing::mask_from_art;

namespace {

Mask filled(int w, int h, int r0, int c0, int r1, int c1) {
  Mask m(w, h);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) m(r, c) = 1.0f;
  return m;
}

Mask annulus() {
  Mask m = filled(16, 16, 4, 4, 11, 11);
  for (int r = 6; r <= 9; ++r)
    for (int c = 6; c <= 9; ++c) m(r, c) = 0.0f;
  return m;
}

// Foreground pixels with a background (or off-raster) 4-neighbour.
std::set<std::pair<int, int>> boundary_pixels(const Mask& m) {
  std::set<std::pair<int, int>> out;
  auto bg = [&](int r, int c) { return r < 0 || c < 0 || r >= m.height() || c >= m.width() || m(r, c) <= 0.5f; };
  for (int r = 0; r < m.height(); ++r)
    for (int c = 0; c < m.width(); ++c)
      if (!bg(r, c) && (bg(r - 1, c) || bg(r + 1, c) || bg(r, c - 1) || bg(r, c + 1))) out.insert({r, c});
  return out;
}

std::vector<Point> chain_points(const RingChain& chain) {
  std::vector<Point> out;
  for (const auto& p : chain.pixels) out.push_back(to_point(p));
  return out;
}

// Single-pixel peaks at the boundary pixels nearest each polygon vertex.
CornerMap ideal_corner_map(const Mask& mask, const Polygon& poly) {
  std::vector<Point> all(poly.outer.begin(), poly.outer.end());
  for (const auto& ring : poly.inner) all.insert(all.end(), ring.begin(), ring.end());
  return corner_target(mask, all, 0.0);
}

bool on_boundary(const Point& p, const std::set<std::pair<int, int>>& boundary) {
  return boundary.count({static_cast<int>(p.y), static_cast<int>(p.x)}) > 0 && p.x == std::floor(p.x) &&
         p.y == std::floor(p.y);
}

}  // namespace

TEST(TraceRings, FourByFourSquare) {
  const auto rings = trace_rings(filled(10, 8, 2, 3, 5, 6));
  ASSERT_EQ(rings.size(), 1u);
  EXPECT_TRUE(rings[0].outer);
  EXPECT_EQ(rings[0].pixels.size(), 12u);
  EXPECT_EQ(rings[0].pixels.front(), (PixelPos{2, 3}));
  EXPECT_EQ(rings[0].pixels[1], (PixelPos{2, 4}));
  EXPECT_LT(signed_area(chain_points(rings[0])), 0.0);
}

TEST(TraceRings, SinglePixel) {
  Mask m(5, 5);
  m(2, 2) = 1.0f;
  const auto rings = trace_rings(m);
  ASSERT_EQ(rings.size(), 1u);
  EXPECT_EQ(rings[0].pixels, (std::vector<PixelPos>{{2, 2}}));
}

TEST(TraceRings, AnnulusHasOuterAndHole) {
  const auto rings = trace_rings(annulus());
  ASSERT_EQ(rings.size(), 2u);
  EXPECT_TRUE(rings[0].outer);
  EXPECT_FALSE(rings[1].outer);
  EXPECT_EQ(rings[0].pixels.size(), 28u);
  EXPECT_EQ(rings[1].pixels.size(), 16u);  // the hole's diagonal corners touch it only diagonally
  EXPECT_LT(signed_area(chain_points(rings[0])), 0.0);
  EXPECT_GT(signed_area(chain_points(rings[1])), 0.0);
}

TEST(TraceRings, ChainsPartitionTheBoundary) {
  SynthParams p;
  p.hole_probability = 0.5;
  const auto items = generate_synthetic(60, 21, p);
  int with_holes = 0;
  for (const auto& it : items) {
    const auto rings = trace_rings(it.ideal);
    with_holes += rings.size() > 1;
    std::set<std::pair<int, int>> seen;
    for (const auto& ring : rings) {
      std::set<std::pair<int, int>> mine;
      for (std::size_t i = 0; i < ring.pixels.size(); ++i) {
        const PixelPos a = ring.pixels[i], b = ring.pixels[(i + 1) % ring.pixels.size()];
        EXPECT_LE(std::max(std::abs(a.row - b.row), std::abs(a.col - b.col)), 1) << it.name;
        mine.insert({a.row, a.col});
      }
      for (const auto& px : mine) EXPECT_TRUE(seen.insert(px).second) << it.name << " pixel on two chains";
    }
    EXPECT_EQ(seen, boundary_pixels(it.ideal)) << it.name;
  }
  EXPECT_GT(with_holes, 5);
}

TEST(CornerCandidates, SuppressionAndThreshold) {
  CornerMap m(6, 5);
  m(1, 1) = 0.9f;
  m(1, 2) = 0.9f;  // plateau: the first in raster order survives
  m(3, 4) = 0.7f;
  m(4, 4) = 0.6f;
  m(0, 5) = 0.4f;
  const auto c = corner_candidates(m, 0.5f);
  EXPECT_EQ(c, (std::vector<PixelPos>{{1, 1}, {3, 4}}));
  EXPECT_TRUE(corner_candidates(m, 0.95f).empty());
}

TEST(OrderAndSnap, SquareCornersComeOutClockwise) {
  const Mask sq = filled(12, 12, 2, 2, 9, 9);
  const RingChain ring = trace_rings(sq)[0];
  std::vector<PixelPos> cands{{9, 2}, {2, 9}, {9, 9}, {2, 2}};
  const auto out = order_and_snap(cands, ring, 2.0);
  const std::vector<PixelPos> want{{2, 2}, {2, 9}, {9, 9}, {9, 2}};
  EXPECT_EQ(out, want);
  std::vector<PixelPos> shuffled{{2, 9}, {9, 2}, {2, 2}, {9, 9}};
  EXPECT_EQ(order_and_snap(shuffled, ring, 2.0), want);
}

TEST(OrderAndSnap, SnapsNearbyAndDropsFarCandidates) {
  const Mask sq = filled(24, 24, 2, 2, 9, 9);
  const RingChain ring = trace_rings(sq)[0];
  // (1,1) snaps to the corner at distance sqrt 2 and merges with (2,2);
  // (5,5) is 3 px from the ring and (20,20) far away.
  std::vector<PixelPos> cands{{1, 1}, {20, 20}, {2, 2}, {5, 5}, {4, 4}};
  EXPECT_EQ(order_and_snap(cands, ring, 2.0), (std::vector<PixelPos>{{2, 2}, {2, 4}}));
  CornerMap map(24, 24);
  map(9, 9) = 0.8f;
  map(20, 20) = 0.9f;
  EXPECT_EQ(order_and_snap(map, ring, 0.5f), (std::vector<PixelPos>{{9, 9}}));
  EXPECT_THROW(order_and_snap(map, ring, 0.0f), std::invalid_argument);
}

TEST(FilterNearEdge, Examples) {
  const std::vector<Point> square_mid{{0, 0}, {5, 0}, {10, 0}, {10, 10}, {0, 10}};
  EXPECT_EQ(filter_near_edge(square_mid, 2.0), (std::vector<Point>{{0, 0}, {10, 0}, {10, 10}, {0, 10}}));
  const std::vector<Point> ell{{0, 0}, {4, 0}, {4, 6}, {10, 6}, {10, 10}, {0, 10}};
  EXPECT_EQ(filter_near_edge(ell, 1.0), ell);
  const std::vector<Point> tri{{0, 0}, {10, 0.5}, {20, 0}};
  EXPECT_EQ(filter_near_edge(tri, 5.0).size(), 3u);
}

TEST(FilterNearEdge, EachStepMovesHausdorffByAtMostThreshold) {
  const auto items = generate_synthetic(40, 22, SynthParams{});
  std::mt19937_64 rng(23);
  const double dist = 2.0;
  int steps = 0;
  for (const auto& it : items) {
    const RingChain ring = trace_rings(it.ideal)[0];
    const std::vector<Point> chain = chain_points(ring);
    // Every third ring pixel as a vertex, so there is plenty to remove.
    std::vector<Point> poly;
    for (std::size_t i = 0; i < chain.size(); i += 3) poly.push_back(chain[i]);
    if (poly.size() < 4) continue;
    double before = hausdorff_distance(poly, chain);
    while (filter_near_edge_step(poly, dist)) {
      const double after = hausdorff_distance(poly, chain);
      EXPECT_LE(after - before, dist + 1e-9) << it.name;
      before = after;
      ++steps;
    }
    EXPECT_GE(poly.size(), 3u);
  }
  EXPECT_GT(steps, 100);
}

TEST(ExtractPolygons, RectangleGolden) {
  const Mask m = filled(40, 40, 10, 8, 29, 31);
  CornerMap corners(40, 40);
  for (auto [r, c] : {std::pair{10, 8}, {10, 31}, {29, 31}, {29, 8}}) corners(r, c) = 1.0f;
  const auto polys = extract_polygons(m, FixedCornerMap(corners));
  ASSERT_EQ(polys.size(), 1u);
  const std::vector<Point> want{{8, 10}, {31, 10}, {31, 29}, {8, 29}};
  ASSERT_EQ(polys[0].outer.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LE(std::abs(polys[0].outer[i].x - want[i].x), 1.0);
    EXPECT_LE(std::abs(polys[0].outer[i].y - want[i].y), 1.0);
  }
  EXPECT_TRUE(polys[0].inner.empty());
  EXPECT_EQ(polys[0].instance_id, 1);
  EXPECT_GT(iou(rasterize_polygon(polys[0], 40, 40), m), 0.9);
}

TEST(ExtractPolygons, LShapeHasSixVertices) {
  Mask m = filled(40, 40, 6, 6, 33, 17);
  for (int r = 22; r <= 33; ++r)
    for (int c = 18; c <= 30; ++c) m(r, c) = 1.0f;
  CornerMap corners(40, 40);
  for (auto [r, c] : {std::pair{6, 6}, {6, 17}, {22, 17}, {22, 30}, {33, 30}, {33, 6}}) corners(r, c) = 0.95f;
  const auto polys = extract_polygons(m, FixedCornerMap(corners));
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].outer.size(), 6u);
}

TEST(ExtractPolygons, AnnulusKeepsItsHole) {
  const Mask m = annulus();
  CornerMap corners(16, 16);
  for (auto [r, c] : {std::pair{4, 4}, {4, 11}, {11, 11}, {11, 4}, {6, 6}, {6, 9}, {9, 9}, {9, 6}}) corners(r, c) = 1.0f;
  const auto polys = extract_polygons(m, FixedCornerMap(corners));
  ASSERT_EQ(polys.size(), 1u);
  ASSERT_EQ(polys[0].inner.size(), 1u);
  EXPECT_EQ(polys[0].outer.size(), 4u);
  EXPECT_EQ(polys[0].inner[0].size(), 4u);
  EXPECT_LT(signed_area(polys[0].outer), 0.0);
  EXPECT_GT(signed_area(polys[0].inner[0]), 0.0);
}

TEST(ExtractPolygons, EmptyMaskAndSmallInstances) {
  EXPECT_TRUE(extract_polygons(Mask(20, 20), FixedCornerMap(CornerMap(20, 20))).empty());
  Mask m = filled(20, 20, 2, 2, 4, 4);  // 9 px, below min_area
  for (int r = 10; r <= 16; ++r)
    for (int c = 10; c <= 16; ++c) m(r, c) = 1.0f;
  const auto polys = extract_polygons(m, FixedCornerMap(CornerMap(20, 20)));
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].instance_id, 2);
  PolygonizeParams keep_all;
  keep_all.min_area = 0;
  keep_all.dist_threshold = 0.5;  // keeps the 3x3 square from collapsing under simplification
  EXPECT_EQ(extract_polygons(m, FixedCornerMap(CornerMap(20, 20)), keep_all).size(), 2u);
}

TEST(ExtractPolygons, FallsBackToDouglasPeucker) {
  const Mask m = filled(30, 30, 5, 5, 20, 24);
  const auto polys = extract_polygons(m, FixedCornerMap(CornerMap(30, 30)));
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].outer.size(), 4u);
  EXPECT_GT(iou(rasterize_polygon(polys[0], 30, 30), m), 0.9);
}

TEST(ExtractPolygons, CornerMapSizeMustMatch) {
  class Wrong final : public CornerDetector {
   public:
    CornerMap detect(const Mask&, PixelPos) const override { return CornerMap(3, 3); }
  };
  EXPECT_THROW(extract_polygons(filled(20, 20, 5, 5, 12, 12), Wrong{}), std::runtime_error);
  PolygonizeParams bad;
  bad.instance_threshold = 1.0f;
  EXPECT_THROW(extract_polygons(Mask(8, 8), FixedCornerMap(CornerMap(8, 8)), bad), std::invalid_argument);
}

TEST(ExtractPolygons, InvariantsOnSyntheticScenes) {
  // Several shapes per canvas, ideal corner maps.
  SynthParams p;
  p.hole_probability = 0.4;
  const auto items = generate_synthetic(48, 24, p);
  for (std::size_t s = 0; s + 3 < items.size(); s += 4) {
    Mask scene(64, 64);
    CornerMap corners(64, 64);
    for (int q = 0; q < 4; ++q) {
      const auto& it = items[s + static_cast<std::size_t>(q)];
      const CornerMap cm = ideal_corner_map(it.ideal, it.polygon);
      const int dr = (q / 2) * 32, dc = (q % 2) * 32;
      for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) {
          scene(r + dr, c + dc) = it.ideal(r, c);
          corners(r + dr, c + dc) = cm(r, c);
        }
    }
    const auto polys = extract_polygons(scene, FixedCornerMap(corners));
    const auto comps = connected_components(scene);
    EXPECT_LE(static_cast<int>(polys.size()), comps.count);
    const auto boundary = boundary_pixels(scene);
    for (const auto& poly : polys) {
      EXPECT_GE(poly.outer.size(), 3u);
      EXPECT_LT(signed_area(poly.outer), 0.0);
      for (const auto& v : poly.outer) EXPECT_TRUE(on_boundary(v, boundary)) << v.x << "," << v.y;
      for (const auto& ring : poly.inner) {
        EXPECT_GT(signed_area(ring), 0.0);
        for (const auto& v : ring) EXPECT_TRUE(on_boundary(v, boundary));
      }
    }
  }
}

TEST(ExtractPolygons, IdealCornersRoundTrip) {
  const auto items = generate_synthetic(50, 25, SynthParams{});
  double total = 0;
  for (const auto& it : items) {
    const auto polys = extract_polygons(it.ideal, FixedCornerMap(ideal_corner_map(it.ideal, it.polygon)));
    ASSERT_EQ(polys.size(), 1u) << it.name;
    const double v = iou(rasterize_polygon(polys[0], 32, 32), it.ideal);
    EXPECT_GT(v, 0.8) << it.name;
    total += v;
  }
  EXPECT_GT(total / 50, 0.95);
}

TEST(ExtractPolygons, Deterministic) {
  const auto items = generate_synthetic(8, 26, SynthParams{});
  for (const auto& it : items) {
    const FixedCornerMap det(ideal_corner_map(it.ideal, it.polygon));
    const auto a = extract_polygons(it.ideal, det);
    const auto b = extract_polygons(it.ideal, det);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(to_wkt(a[i]), to_wkt(b[i]));
  }
}

TEST(Geometry, SignedAreaAndDistances) {
  const std::vector<Point> cw{{0, 0}, {4, 0}, {4, 3}, {0, 3}};  // clockwise on screen
  EXPECT_DOUBLE_EQ(signed_area(cw), -12.0);
  EXPECT_TRUE(is_clockwise(cw));
  EXPECT_DOUBLE_EQ(point_segment_distance({2, 5}, {0, 0}, {4, 0}), 5.0);
  EXPECT_DOUBLE_EQ(point_segment_distance({7, 4}, {0, 0}, {4, 0}), 5.0);
  EXPECT_DOUBLE_EQ(distance_to_ring({2, 1}, cw), 1.0);
  EXPECT_TRUE(inside_ring({1, 1}, cw));
  EXPECT_FALSE(inside_ring({5, 1}, cw));
  Polygon poly{cw, {}, 1};
  EXPECT_EQ(to_wkt(poly), "POLYGON ((0 0, 4 0, 4 3, 0 3, 0 0))");
}

TEST(Geometry, DouglasPeuckerKeepsCorners) {
  std::vector<Point> ring;
  for (int x = 0; x < 10; ++x) ring.push_back({double(x), 0});
  for (int y = 0; y < 6; ++y) ring.push_back({10, double(y)});
  for (int x = 10; x > 0; --x) ring.push_back({double(x), 6});
  for (int y = 6; y > 0; --y) ring.push_back({0, double(y)});
  EXPECT_EQ(douglas_peucker_closed(ring, 0.5), (std::vector<Point>{{0, 0}, {10, 0}, {10, 6}, {0, 6}}));
}

TEST(Synth, CrackBoundaries) {
  const auto rings = crack_boundaries(filled(6, 6, 1, 1, 3, 4));
  ASSERT_EQ(rings.size(), 1u);
  EXPECT_EQ(rings[0].size(), 4u);
  EXPECT_DOUBLE_EQ(signed_area(rings[0]), -12.0);
  for (const auto& p : rings[0]) EXPECT_DOUBLE_EQ(p.x - std::floor(p.x), 0.5);
  const auto holes = crack_boundaries(annulus());
  ASSERT_EQ(holes.size(), 2u);
  EXPECT_DOUBLE_EQ(signed_area(holes[0]) + signed_area(holes[1]), -48.0);
  EXPECT_THROW(crack_boundaries(mask_from_art({"#.", ".#"})), std::invalid_argument);
}

TEST(Synth, CornerTargetDisk) {
  const Mask m = filled(20, 20, 2, 2, 17, 17);
  const Point v{2, 9};  // on the top edge
  const Mask t = corner_target(m, std::span<const Point>(&v, 1), 2.0);
  int count = 0;
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) {
      const bool in = (r - 9) * (r - 9) + (c - 2) * (c - 2) <= 4;
      EXPECT_EQ(t(r, c), in ? 1.0f : 0.0f) << r << "," << c;
      count += in;
    }
  EXPECT_EQ(count, 13);
}

TEST(Synth, DeterministicAndInRange) {
  SynthParams p;
  const auto a = generate_synthetic(30, 27, p);
  const auto b = generate_synthetic(30, 27, p);
  ASSERT_EQ(a.size(), 30u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].seg == b[i].seg);
    EXPECT_TRUE(a[i].image == b[i].image);
    EXPECT_EQ(to_wkt(a[i].polygon), to_wkt(b[i].polygon));
    const auto n = static_cast<int>(a[i].polygon.outer.size());
    EXPECT_GE(n, p.min_vertices);
    EXPECT_LE(n, p.max_vertices);
    for (const auto& hole : a[i].polygon.inner) EXPECT_EQ(hole.size(), 4u);
    EXPECT_EQ(connected_components(a[i].ideal).count, 1);
    EXPECT_GT(connected_components(a[i].seg).count, 0);
    // The polygon is exactly the ideal mask's pixel boundary.
    EXPECT_TRUE(rasterize_polygon(a[i].polygon, p.size, p.size) == a[i].ideal) << a[i].name;
  }
  EXPECT_FALSE(generate_synthetic(1, 28, p)[0].seg == a[0].seg);
}

TEST(Synth, WriteAndReadBack) {
  fforge::testing::TempDir dir("synth");
  const SynthParams p;
  const auto items = generate_synthetic(5, 29, p);
  write_synthetic(dir.path().string(), items, 29, p);
  const auto back = read_synthetic(dir.path().string());
  ASSERT_EQ(back.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(back[i].name, items[i].name);
    EXPECT_TRUE(back[i].ideal == items[i].ideal);
    EXPECT_TRUE(back[i].seg == items[i].seg);
    EXPECT_TRUE(back[i].corners == items[i].corners);
    EXPECT_EQ(to_wkt(back[i].polygon), to_wkt(items[i].polygon));
  }
}
