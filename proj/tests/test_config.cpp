#include <gtest/gtest.h>

#include <sstream>

#include "fforge/config.hpp"
#include "test_util.hpp"

using namespace fforge;
using fforge::testing::TempDir;

TEST(Config, ParsesCommentsAndWhitespace) {
  std::istringstream in("# header\n\n  lr = 0.001  # inline\nseed=7\n");
  const auto kv = parse_key_values(in);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"lr", "0.001"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"seed", "7"}));
}

TEST(Config, MalformedLinesReportTheLineNumber) {
  std::istringstream in("seed = 1\njust words\n");
  try {
    parse_key_values(in);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream empty_value("seed =\n");
  EXPECT_THROW(parse_key_values(empty_value), std::invalid_argument);
}

TEST(Config, SetsEveryLayer) {
  PipelineConfig c;
  c.set("alpha", "2.5");
  c.set("delta_max", "0.5");
  c.set("ramp_start", "10");
  c.set("ramp_end", "20");
  c.set("potts_sigma_rgb", "0.2");
  c.set("ncut_radius", "3");
  c.set("non_saturating", "true");
  c.set("corner_lr", "0.001");
  c.set("min_area", "4");
  c.set("synth_max_vertices", "8");
  c.set("seed", "99");
  c.propagate_seed();
  EXPECT_EQ(c.train.weights.alpha, 2.5);
  EXPECT_EQ(c.train.schedule.delta_max, 0.5);
  EXPECT_EQ(c.train.schedule(15).first, 0.25);
  EXPECT_EQ(c.train.potts_kernel.sigma_rgb, 0.2);
  EXPECT_EQ(c.train.ncut_kernel.radius, 3);
  EXPECT_TRUE(c.train.objective.non_saturating);
  EXPECT_EQ(c.corners.adam.lr, 0.001);
  EXPECT_EQ(c.polygonize.min_area, 4);
  EXPECT_EQ(c.synth.max_vertices, 8);
  EXPECT_EQ(c.train.seed, 99u);
  EXPECT_EQ(c.corners.seed, 99u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsBadInput) {
  PipelineConfig c;
  EXPECT_THROW(c.set("no_such_key", "1"), std::invalid_argument);
  EXPECT_THROW(c.set("lr", "fast"), std::invalid_argument);
  EXPECT_THROW(c.set("iterations", "1.5"), std::invalid_argument);
  EXPECT_THROW(c.set("augment", "maybe"), std::invalid_argument);
  c.set("beta", "-1");
  EXPECT_THROW(c.validate(), std::invalid_argument);
  PipelineConfig d;
  d.set("ramp_end", "100");
  d.set("ramp_start", "100");
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(Config, DefaultsFollowTheTrainingRecipe) {
  const PipelineConfig c;
  EXPECT_EQ(c.train.weights.alpha, 3.0);
  EXPECT_EQ(c.train.weights.beta, 1.0);
  EXPECT_EQ(c.train.weights.gamma, 3.0);
  EXPECT_EQ(c.train.schedule.start, 40000);
  EXPECT_EQ(c.train.schedule.end, 80000);
  EXPECT_EQ(c.train.schedule.delta_max, 175.0);
  EXPECT_EQ(c.train.schedule.epsilon_max, 1.0);
  EXPECT_EQ(c.train.batch_size, 4);
  EXPECT_EQ(c.train.iterations, 140000);
  EXPECT_EQ(c.train.adam.lr, 1e-4);
  EXPECT_EQ(c.train.net.encoder_pools, 2);
  EXPECT_EQ(c.train.net.decoder_residual_blocks, 8);
  EXPECT_EQ(c.train.net.discriminator_pools, 4);
  EXPECT_EQ(c.corners.net.residual_blocks, 4);
  EXPECT_FALSE(c.train.objective.non_saturating);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, TextRoundTrips) {
  PipelineConfig c;
  c.set("lr", "0.00123");
  c.set("snap_radius", "1.5");
  c.set("exclude_empty_tiles", "true");
  TempDir dir("config");
  fforge::testing::write_file(dir.file("c.txt"), c.to_text());
  const PipelineConfig back = load_config(dir.file("c.txt"));
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.train.adam.lr, 0.00123);
  EXPECT_THROW(load_config(dir.file("missing.txt")), std::runtime_error);
}
