#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fforge/raster.hpp"
#include "test_util.hpp"

using namespace fforge;
using fforge::testing::mask_from_art;
using fforge::testing::TempDir;

TEST(RasterIo, PgmBytesScaleLinearly) {
  TempDir dir("raster");
  std::string bytes = "P5\n2 2\n255\n";
  bytes += std::string{'\x00', '\xff', '\x80', '\xff'};
  fforge::testing::write_file(dir.file("m.pgm"), bytes);
  const Mask m = load_mask(dir.file("m.pgm"));
  ASSERT_EQ(m.width(), 2);
  ASSERT_EQ(m.height(), 2);
  EXPECT_EQ(m(0, 0), 0.0f);
  EXPECT_EQ(m(0, 1), 1.0f);
  EXPECT_EQ(m(1, 0), 128.0f / 255.0f);
  EXPECT_EQ(m(1, 1), 1.0f);
}

TEST(RasterIo, ZeroPngLoadsAsZeros) {
  TempDir dir("raster");
  save_mask(Mask(5, 3), dir.file("z.png"));
  const Mask m = load_mask(dir.file("z.png"));
  EXPECT_EQ(m.width(), 5);
  EXPECT_EQ(m.height(), 3);
  EXPECT_EQ(m.values().maxCoeff(), 0.0f);
}

TEST(RasterIo, RgbPngHas48Floats) {
  TempDir dir("raster");
  IntensityImage img(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) img.pixel(r, c) << r / 3.0f, c / 3.0f, 1.0f;
  save_image(img, dir.file("i.png"));
  const IntensityImage back = load_image(dir.file("i.png"));
  EXPECT_EQ(back.pixels().size(), 48);
  EXPECT_NEAR(back.pixel(3, 1)(0), 1.0f, 1e-6);
  EXPECT_NEAR(back.pixel(3, 1)(1), 85.0f / 255.0f, 1e-6);
}

TEST(RasterIo, EightBitMasksRoundTripExactly) {
  TempDir dir("raster");
  Mask m(7, 5);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) m(r, c) = static_cast<float>((r * 7 + c) * 7 % 256) / 255.0f;
  for (const char* name : {"a.png", "a.pgm"}) {
    save_mask(m, dir.file(name));
    const Mask once = load_mask(dir.file(name));
    save_mask(once, dir.file(std::string("b") + name));
    EXPECT_EQ(fforge::testing::read_file(dir.file(name)), fforge::testing::read_file(dir.file(std::string("b") + name)));
    EXPECT_TRUE(once == m) << name;
  }
}

TEST(RasterIo, Errors) {
  TempDir dir("raster");
  EXPECT_THROW(load_mask(dir.file("missing.png")), std::runtime_error);
  fforge::testing::write_file(dir.file("deep.pgm"), "P5\n1 1\n65535\n\x00\x00");
  EXPECT_THROW(load_mask(dir.file("deep.pgm")), std::runtime_error);
  fforge::testing::write_file(dir.file("short.pgm"), "P5\n4 4\n255\nab");
  EXPECT_THROW(load_mask(dir.file("short.pgm")), std::runtime_error);
  save_mask(Mask(3, 3), dir.file("m.png"));
  EXPECT_THROW(load_mask(dir.file("m.png"), Extent{4, 3}), std::runtime_error);
  EXPECT_NO_THROW(load_mask(dir.file("m.png"), Extent{3, 3}));
  save_image(IntensityImage(2, 2, 0.5f), dir.file("rgb.png"));
  EXPECT_THROW(load_mask(dir.file("rgb.png")), std::runtime_error);
  EXPECT_THROW(save_mask(Mask(2, 2), dir.file("m.bmp")), std::runtime_error);
}

TEST(ConnectedComponents, TwoBlobs) {
  const Mask m = mask_from_art({"##...", "##...", ".....", "...##", "...##"});
  const auto lab = connected_components(m);
  EXPECT_EQ(lab.count, 2);
  EXPECT_EQ(lab.labels(0, 0), 1);
  EXPECT_EQ(lab.labels(4, 4), 2);
  EXPECT_EQ(lab.labels(2, 2), 0);
}

TEST(ConnectedComponents, AllOnesIsOneComponent) {
  const auto lab = connected_components(Mask(6, 4, 1.0f));
  EXPECT_EQ(lab.count, 1);
  EXPECT_EQ(lab.labels.minCoeff(), 1);
}

TEST(ConnectedComponents, DiagonalTouchJoins) {
  const auto lab = connected_components(mask_from_art({"#..", ".#.", "..#"}));
  EXPECT_EQ(lab.count, 1);
}

TEST(ConnectedComponents, EmptyAndThreshold) {
  EXPECT_EQ(connected_components(Mask(4, 4)).count, 0);
  Mask m(3, 1);
  m(0, 0) = 0.5f;
  m(0, 2) = 0.51f;
  EXPECT_EQ(connected_components(m).count, 1);
  EXPECT_THROW(connected_components(m, 0.0f), std::invalid_argument);
  EXPECT_THROW(connected_components(m, 1.0f), std::invalid_argument);
}

namespace {
// Flood-fill labeling in scan order.
std::vector<int> oracle_labels(const Mask& m) {
  const int w = m.width(), h = m.height();
  std::vector<int> lab(static_cast<std::size_t>(w * h), 0);
  int next = 0;
  for (int s = 0; s < w * h; ++s) {
    if (m(s / w, s % w) <= 0.5f || lab[static_cast<std::size_t>(s)]) continue;
    ++next;
    std::vector<int> stack{s};
    lab[static_cast<std::size_t>(s)] = next;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int r = p / w + dr, c = p % w + dc;
          if (r < 0 || c < 0 || r >= h || c >= w || m(r, c) <= 0.5f) continue;
          auto& l = lab[static_cast<std::size_t>(r * w + c)];
          if (!l) {
            l = next;
            stack.push_back(r * w + c);
          }
        }
    }
  }
  return lab;
}
}  // namespace

TEST(ConnectedComponents, MatchesFloodFillPartition) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Mask m = fforge::testing::random_binary_mask(13, 9, rng, 0.35);
    const auto lab = connected_components(m);
    const auto want = oracle_labels(m);
    // Both label in scan order, so the partitions agree label for label.
    for (int i = 0; i < 13 * 9; ++i) EXPECT_EQ(lab.labels(i / 13, i % 13), want[static_cast<std::size_t>(i)]);
    EXPECT_EQ(lab.count, *std::max_element(want.begin(), want.end()));
  }
}

namespace {
PatchSample numbered(int w, int h) {
  IntensityImage img(w, h);
  Mask seg(w, h), ideal(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const float v = static_cast<float>(r * w + c) / static_cast<float>(w * h);
      img.pixel(r, c) << v, 1.0f - v, v * 0.5f;
      seg(r, c) = v;
      ideal(r, c) = 1.0f - v;
    }
  return {img, seg, ideal, 0, 0};
}
}  // namespace

TEST(SamplePatch, FullSizeCropStartsAtOrigin) {
  const auto p = numbered(8, 8);
  const auto s = sample_patch(p.image, p.seg, p.ideal, 8, 5);
  EXPECT_EQ(s.row, 0);
  EXPECT_EQ(s.col, 0);
  EXPECT_TRUE(s.seg == p.seg);
}

TEST(SamplePatch, DeterministicAndAligned) {
  const auto p = numbered(20, 16);
  const auto a = sample_patch(p.image, p.seg, p.ideal, 6, 11);
  const auto b = sample_patch(p.image, p.seg, p.ideal, 6, 11);
  EXPECT_EQ(a.row, b.row);
  EXPECT_EQ(a.col, b.col);
  EXPECT_EQ(a.seg.width(), 6);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      EXPECT_EQ(a.seg(r, c), p.seg(a.row + r, a.col + c));
      EXPECT_EQ(a.ideal(r, c), p.ideal(a.row + r, a.col + c));
      EXPECT_EQ(a.image.pixel(r, c)(1), p.image.pixel(a.row + r, a.col + c)(1));
    }
}

TEST(SamplePatch, OriginsCoverAllQuadrants) {
  const Mask m(512, 512);
  const IntensityImage img(512, 512);
  std::set<int> quadrants;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto s = sample_patch(img, m, m, 256, seed);
    ASSERT_LE(s.row, 256);
    ASSERT_LE(s.col, 256);
    quadrants.insert((s.row >= 128 ? 2 : 0) + (s.col >= 128 ? 1 : 0));
  }
  EXPECT_EQ(quadrants.size(), 4u);
}

TEST(SamplePatch, Errors) {
  const auto p = numbered(8, 8);
  EXPECT_THROW(sample_patch(p.image, p.seg, p.ideal, 9, 0), std::invalid_argument);
  EXPECT_THROW(sample_patch(p.image, Mask(7, 8), p.ideal, 4, 0), std::invalid_argument);
}

TEST(Augment, FullTurnAndDoubleFlipAreIdentity) {
  const auto p = numbered(5, 5);
  auto q = p;
  for (int i = 0; i < 4; ++i) q = augment(q, Augmentation::rot90(1));
  EXPECT_TRUE(q.seg == p.seg && q.ideal == p.ideal && q.image == p.image);
  EXPECT_TRUE(augment(p, Augmentation::rot90(4)).seg == p.seg);
  for (auto op : {Augmentation::flip_h(), Augmentation::flip_v()}) {
    const auto twice = augment(augment(p, op), op);
    EXPECT_TRUE(twice.seg == p.seg && twice.image == p.image);
  }
}

TEST(Augment, QuarterTurnMovesHotPixel) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Mask m(3, 3);
      m(r, c) = 1.0f;
      const Mask t = augment(m, Augmentation::rot90(1));
      EXPECT_EQ(t(c, 2 - r), 1.0f);
      EXPECT_EQ(t.values().sum(), 1.0f);
    }
}

TEST(Augment, KeepsRastersAligned) {
  const auto p = numbered(6, 6);
  for (auto op : {Augmentation::rot90(1), Augmentation::rot90(3), Augmentation::flip_h(), Augmentation::flip_v()}) {
    const auto q = augment(p, op);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) {
        // seg encodes the source index, so the other rasters must agree with it.
        EXPECT_FLOAT_EQ(q.ideal(r, c), 1.0f - q.seg(r, c));
        EXPECT_FLOAT_EQ(q.image.pixel(r, c)(0), q.seg(r, c));
      }
    std::vector<float> a(p.seg.values().data(), p.seg.values().data() + 36);
    std::vector<float> b(q.seg.values().data(), q.seg.values().data() + 36);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(Augment, RotationNeedsSquare) {
  EXPECT_THROW(augment(Mask(4, 3), Augmentation::rot90(1)), std::invalid_argument);
  EXPECT_NO_THROW(augment(Mask(4, 3), Augmentation::flip_h()));
}
