#include <gtest/gtest.h>

#include "flowqa/error.hpp"
#include "flowqa/eval.hpp"
#include "flowqa/media_io.hpp"
#include "flowqa/synthetic.hpp"
#include "test_support.hpp"

namespace flowqa {
namespace {

TEST(ValueNoise, DeterministicAndInRange) {
  const Plane a = ValueNoise(40, 30, 3), b = ValueNoise(40, 30, 3), c = ValueNoise(40, 30, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (float v : a.data) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
}

TEST(Canvas, WindowBounds) {
  const TextureCanvas canvas = MakeTextureCanvas(32, 32, 1);
  EXPECT_EQ(canvas.Window(0, 0, 32, 32).width(), 32);
  EXPECT_THROW(canvas.Window(1, 0, 32, 32), Error);
  EXPECT_THROW(canvas.Window(-1, 0, 8, 8), Error);
}

TEST(PanningClip, ContentMovesByVelocity) {
  const TextureCanvas canvas = MakeTextureCanvas(64, 64, 2);
  const VideoSequence clip = PanningClip(canvas, 24, 24, 3, 3, 1, 20, 20);
  ASSERT_EQ(clip.size(), 3u);
  // pixel (x, y) at t=0 reappears at (x + 3, y + 1) at t=1
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) EXPECT_EQ(clip.frames[0].plane(1).at(x, y), clip.frames[1].plane(1).at(x + 3, y + 1));
}

TEST(SyntheticManifest, LayoutAndPseudoDmos) {
  const auto dir = testing::ScratchDir("synthetic_small");
  SyntheticManifestOptions o;
  o.width = 48;
  o.height = 40;
  o.frames = 6;
  o.speeds = {1, 3};
  const DatasetManifest m = WriteSyntheticManifest(dir, o);
  ASSERT_EQ(m.rows.size(), 2 * SyntheticConditions().size());
  for (const ManifestRow& row : m.rows) {
    const VideoSequence ref = OpenVideo(dir / row.ref), dis = OpenVideo(dir / row.dis);
    EXPECT_EQ(ref.size(), 6u);
    EXPECT_EQ(dis.size(), 6u);
    EXPECT_EQ(dis.width(), 48);
    EXPECT_EQ(dis.frames[0], ref.frames[0]) << row.tag;
  }
  EXPECT_EQ(m.rows[0].tag, "s1_avg2");
  EXPECT_EQ(m.rows[0].dmos, 10.0);
  const DatasetManifest loaded = LoadManifest(dir / "manifest.csv", true);
  EXPECT_EQ(loaded.rows.size(), m.rows.size());
  EXPECT_EQ(loaded.rows.back().dmos, 10.0 * 3 * SyntheticConditions().back().severity);
}

TEST(SyntheticManifest, DmosMonotoneInSpeedAndSeverity) {
  const auto& conds = SyntheticConditions();
  for (size_t i = 1; i < conds.size(); ++i) EXPECT_GT(conds[i].severity, conds[i - 1].severity);
}

TEST(SyntheticManifest, ShippedSetMatchesRegeneration) {
  const auto shipped = testing::DataDir() / "synthetic";
  const auto dir = testing::ScratchDir("synthetic_regen");
  const DatasetManifest m = WriteSyntheticManifest(dir);
  ASSERT_EQ(m.rows.size(), 12u);
  EXPECT_EQ(ReadFileBytes(dir / "manifest.csv"), ReadFileBytes(shipped / "manifest.csv"));
  for (const ManifestRow& row : m.rows) {
    EXPECT_EQ(ReadFileBytes(dir / row.ref), ReadFileBytes(shipped / row.ref)) << row.ref;
    EXPECT_EQ(ReadFileBytes(dir / row.dis), ReadFileBytes(shipped / row.dis)) << row.dis;
  }
}

}  // namespace
}  // namespace flowqa
