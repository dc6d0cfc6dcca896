#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "flowqa/error.hpp"
#include "flowqa/flow.hpp"
#include "flowqa/media_io.hpp"
#include "flowqa/synthetic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace flowqa {
namespace {

using testing::CentralMeanEpe;
using testing::MakeShiftedPair;

class IntegerShift : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(IntegerShift, RecoveredInCentralRegion) {
  static const TextureCanvas canvas = MakeTextureCanvas(160, 160, 11);
  const auto [dx, dy] = GetParam();
  const auto pair = MakeShiftedPair(canvas, 128, dx, dy);
  const FlowField f = EstimateFlow(pair.prev, pair.next);
  EXPECT_LE(CentralMeanEpe(f, dx, dy, 16), 0.5) << dx << "," << dy;
}

INSTANTIATE_TEST_SUITE_P(Flow, IntegerShift,
                         ::testing::Values(std::pair{2, 0}, std::pair{-3, 2}, std::pair{0, -4}, std::pair{5, 5},
                                           std::pair{-6, 2}, std::pair{7, -3}, std::pair{-8, 0}, std::pair{3, -8},
                                           std::pair{-2, -2}, std::pair{8, 6}));

Frame CircularShift(const Frame& f, int dx, int dy) {
  std::vector<Plane> planes;
  for (const Plane& p : f.planes()) {
    Plane q(p.width, p.height);
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x)
        q.at((x + dx + p.width) % p.width, (y + dy + p.height) % p.height) = p.at(x, y);
    planes.push_back(std::move(q));
  }
  return Frame(f.colorspace(), std::move(planes));
}

TEST(Flow, CircularShiftsOnNoiseTexture) {
  const Frame prev = MakeTextureCanvas(128, 128, 21).Window(0, 0, 128, 128);
  const int margin = 13;  // central 80%
  for (const auto [dx, dy] : {std::pair{3, 0}, std::pair{-2, 4}}) {
    const FlowField f = EstimateFlow(prev, CircularShift(prev, dx, dy));
    EXPECT_LE(CentralMeanEpe(f, dx, dy, margin), 0.5) << dx << "," << dy;
  }
}

TEST(Flow, IdenticalFramesGiveZeroFlow) {
  const TextureCanvas canvas = MakeTextureCanvas(96, 96, 3);
  const Frame f = canvas.Window(0, 0, 96, 96);
  const FlowField flow = EstimateFlow(f, f);
  for (size_t i = 0; i < flow.u.data.size(); ++i) {
    ASSERT_EQ(flow.u.data[i], 0.0f);
    ASSERT_EQ(flow.v.data[i], 0.0f);
  }
}

TEST(Flow, ConstantFramesGiveZeroFlow) {
  const Frame f = Frame::Rgb(64, 64, 0.4f, 0.4f, 0.4f);
  const FlowField flow = EstimateFlow(f, f);
  for (float v : flow.u.data) ASSERT_EQ(v, 0.0f);
}

// Swapping the frames should negate the recovered motion.
TEST(Flow, ReversedPairNegatesMotion) {
  const TextureCanvas canvas = MakeTextureCanvas(160, 160, 5);
  const auto pair = MakeShiftedPair(canvas, 128, 4, -3);
  const FlowField fwd = EstimateFlow(pair.prev, pair.next);
  const FlowField bwd = EstimateFlow(pair.next, pair.prev);
  EXPECT_LE(CentralMeanEpe(fwd, 4, -3, 16), 0.5);
  EXPECT_LE(CentralMeanEpe(bwd, -4, 3, 16), 0.5);
}

TEST(Flow, RejectsMismatchedFrames) {
  EXPECT_THROW(EstimateFlow(Frame::Rgb(64, 64, 0, 0, 0), Frame::Rgb(64, 48, 0, 0, 0)), Error);
}

TEST(Flow, ParamsValidation) {
  FlowParams p;
  p.patch_size = 8;
  EXPECT_THROW(p.Validate(), Error);
  p = {};
  p.levels = 0;
  EXPECT_THROW(p.Validate(), Error);
}

// --- .flo ---------------------------------------------------------------------------

TEST(FloFormat, HandBuiltBytes) {
  // 3x2 field, row-major (u, v) pairs
  const float payload[12] = {1.5f, -2.0f, 0.25f, 8.0f, 0.0f, 1.0f, -3.5f, 0.5f, 7.0f, -7.0f, 0.125f, 2.0f};
  std::vector<uint8_t> bytes(12 + sizeof payload);
  const uint8_t header[12] = {'P', 'I', 'E', 'H', 3, 0, 0, 0, 2, 0, 0, 0};
  std::memcpy(bytes.data(), header, 12);
  std::memcpy(bytes.data() + 12, payload, sizeof payload);
  const FlowField f = ParseFlo(bytes);
  ASSERT_EQ(f.width(), 3);
  ASSERT_EQ(f.height(), 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      EXPECT_EQ(f.u.at(x, y), payload[2 * (y * 3 + x)]);
      EXPECT_EQ(f.v.at(x, y), payload[2 * (y * 3 + x) + 1]);
    }
  EXPECT_EQ(SerializeFlo(f), bytes);
}

TEST(FloFormat, RoundTripThroughFile) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> dist(-20.0f, 20.0f);
  FlowField f(5, 4);
  for (size_t i = 0; i < f.u.data.size(); ++i) {
    f.u.data[i] = dist(rng);
    f.v.data[i] = dist(rng);
  }
  const auto path = testing::ScratchDir("flo") / "a.flo";
  WriteFlo(f, path);
  EXPECT_EQ(ReadFlo(path), f);
}

TEST(FloFormat, BadMagic) {
  auto bytes = SerializeFlo(FlowField(2, 2));
  const float zero = 0.0f;
  std::memcpy(bytes.data(), &zero, 4);
  try {
    ParseFlo(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

TEST(FloFormat, TruncatedPayload) {
  FlowField f(4, 4);
  auto bytes = SerializeFlo(f);
  bytes.resize(bytes.size() - 4);
  try {
    ParseFlo(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTruncated);
  }
}

// --- weights -------------------------------------------------------------------------

TEST(FlowWeights, DiffWeightBruteForce) {
  FlowField a(3, 2), b(3, 2);
  a.u.at(0, 0) = 3;
  a.v.at(0, 0) = 4;  // |d| = 5
  b.u.at(2, 1) = 1;  // |d| = 1
  a.u.at(1, 0) = 2;
  b.u.at(1, 0) = 2;  // equal, |d| = 0
  const WeightMap m = FlowDiffWeight(a, b);
  EXPECT_FALSE(m.uniform_fallback);
  EXPECT_NEAR(m.at(0, 0), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(m.at(2, 1), 1.0 / 6.0, 1e-12);
  EXPECT_EQ(m.at(1, 0), 0.0);
  EXPECT_NEAR(m.Sum(), 1.0, 1e-12);
}

FlowField RandomField(int w, int h, std::mt19937& rng) {
  std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
  FlowField f(w, h);
  for (size_t i = 0; i < f.u.data.size(); ++i) {
    f.u.data[i] = dist(rng);
    f.v.data[i] = dist(rng);
  }
  return f;
}

TEST(FlowWeights, RandomDiffWeightMatchesBruteForce) {
  std::mt19937 rng(4);
  const FlowField a = RandomField(8, 8, rng), b = RandomField(8, 8, rng);
  std::vector<double> mag(64);
  double total = 0.0;
  for (int i = 0; i < 64; ++i) {
    mag[i] = std::hypot(static_cast<double>(a.u.data[i]) - b.u.data[i], static_cast<double>(a.v.data[i]) - b.v.data[i]);
    total += mag[i];
  }
  const WeightMap m = FlowDiffWeight(a, b);
  EXPECT_NEAR(m.Sum(), 1.0, 1e-9);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(m.w[i], mag[i] / total, 1e-9);
  EXPECT_EQ(FlowDiffWeight(b, a).w, m.w);
}

TEST(FlowWeights, SinglePixelDifferenceIsDelta) {
  FlowField a(5, 4), b(5, 4);
  b.v.at(3, 2) = -0.75f;
  const WeightMap m = FlowDiffWeight(a, b);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(m.at(x, y), (x == 3 && y == 2) ? 1.0 : 0.0);
}

TEST(FlowWeights, RandomMagnitudeMatchesBruteForce) {
  std::mt19937 rng(8);
  const FlowField a = RandomField(7, 5, rng);
  auto mag = [&](size_t i) { return std::hypot(static_cast<double>(a.u.data[i]), static_cast<double>(a.v.data[i])); };
  double total = 0.0;
  for (size_t i = 0; i < a.u.data.size(); ++i) total += mag(i);
  const WeightMap m = FlowMagnitudeWeight(a);
  for (size_t i = 0; i < a.u.data.size(); ++i) EXPECT_NEAR(m.w[i], mag(i) / total, 1e-9);
}

TEST(FlowWeights, ConstantMagnitudeIsUniform) {
  FlowField a(4, 3);
  for (float& u : a.u.data) u = 3.0f;
  for (float& v : a.v.data) v = 4.0f;
  const WeightMap m = FlowMagnitudeWeight(a);
  EXPECT_FALSE(m.uniform_fallback);
  for (double w : m.w) EXPECT_NEAR(w, 1.0 / 12, 1e-15);
  EXPECT_TRUE(FlowMagnitudeWeight(FlowField(4, 3)).uniform_fallback);
}

TEST(FlowWeights, IdenticalFlowsFallBackToUniform) {
  FlowField a(4, 4);
  for (float& v : a.u.data) v = 2.0f;
  const WeightMap m = FlowDiffWeight(a, a);
  EXPECT_TRUE(m.uniform_fallback);
  for (double w : m.w) EXPECT_DOUBLE_EQ(w, 1.0 / 16);
}

TEST(FlowWeights, MagnitudeWeight) {
  FlowField a(2, 1);
  a.u.at(0, 0) = 6;
  a.v.at(1, 0) = 2;
  const WeightMap m = FlowMagnitudeWeight(a);
  EXPECT_NEAR(m.at(0, 0), 0.75, 1e-12);
  EXPECT_NEAR(m.at(1, 0), 0.25, 1e-12);
}

TEST(FlowWeights, SizeMismatch) { EXPECT_THROW(FlowDiffWeight(FlowField(3, 3), FlowField(3, 4)), Error); }

// --- providers ------------------------------------------------------------------------

TEST(FlowProviders, FloDirReadsNamedFiles) {
  const auto dir = testing::ScratchDir("flodir");
  FlowField f(4, 4);
  f.u.at(1, 1) = 3.0f;
  WriteFlo(f, dir / "ref_000001.flo");
  const auto provider = MakeFlowProvider("flo-dir:" + dir.string());
  const Frame any = Frame::Rgb(4, 4, 0, 0, 0);
  EXPECT_EQ(provider->Flow(FlowSide::kReference, 1, any, any), f);
  try {
    provider->Flow(FlowSide::kDistorted, 1, any, any);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("dis_000001.flo"), std::string::npos);
  }
}

TEST(FlowProviders, FloDirSizeMismatchRejected) {
  const auto dir = testing::ScratchDir("flodir_size");
  WriteFlo(FlowField(4, 4), dir / "ref_000001.flo");
  const auto provider = MakeFlowProvider("flo-dir:" + dir.string());
  const Frame frame = Frame::Rgb(8, 8, 0, 0, 0);
  EXPECT_THROW(provider->Flow(FlowSide::kReference, 1, frame, frame), Error);
}

TEST(FlowProviders, UnknownSpec) {
  try {
    MakeFlowProvider("pwc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

}  // namespace
}  // namespace flowqa
