#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <string>

#include "flowqa/lpips.hpp"
#include "flowqa/media_io.hpp"
#include "flowqa/nn.hpp"
#include "flowqa/tensor_archive.hpp"
#include "test_support.hpp"

namespace flowqa {
namespace {

using testing::ParityDir;
using testing::SharedArchive;

double RecordedScore(const std::string& pair) {
  const auto bytes = ReadFileBytes(ParityDir() / "scores.json");
  return nlohmann::json::parse(bytes.begin(), bytes.end()).at(pair).get<double>();
}

FeatureMap FromTensor(const Tensor& t) {
  EXPECT_EQ(t.dims.size(), 3u) << t.name;
  FeatureMap m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2]));
  m.data = t.data;
  return m;
}

TEST(Parity, FrameTapsMatchRecordedActivations) {
  const auto recorded = ReadTensorContainer(ParityDir() / "frame0_taps.flpw");
  const auto pyramid = ExtractFeatures(ReadPpm(ParityDir() / "frame0.ppm"), SharedArchive());
  ASSERT_EQ(pyramid.taps.size(), 5u);
  for (size_t i = 0; i < pyramid.taps.size(); ++i) {
    const FeatureMap want = FromTensor(recorded.Get("tap" + std::to_string(i + 1)));
    const FeatureMap& got = pyramid.taps[i];
    ASSERT_TRUE(got.SameShape(want)) << "tap" << i + 1;
    double worst = 0.0;
    for (size_t k = 0; k < got.data.size(); ++k) {
      const double scale = std::max(1.0, std::abs(static_cast<double>(want.data[k])));
      worst = std::max(worst, std::abs(static_cast<double>(got.data[k]) - want.data[k]) / scale);
    }
    EXPECT_LT(worst, 1e-4) << "tap" << i + 1;
  }
}

TEST(Parity, PairScoresMatchRecorded) {
  const auto& archive = SharedArchive();
  const auto weights = LpipsLinearWeights::FromArchive(archive);
  const auto ref = ExtractFeatures(ReadPpm(ParityDir() / "ref.ppm"), archive);
  for (const std::string pair : {"pair0", "pair1", "pair2", "pair3"}) {
    const auto dis = ExtractFeatures(ReadPpm(ParityDir() / (pair + "_dis.ppm")), archive);
    EXPECT_NEAR(LpipsPair(ref, dis, weights), RecordedScore(pair), 1e-4) << pair;
  }
}

TEST(Parity, IdenticalPairScoresExactlyZero) {
  const auto& archive = SharedArchive();
  const auto weights = LpipsLinearWeights::FromArchive(archive);
  const auto ref = ExtractFeatures(ReadPpm(ParityDir() / "ref.ppm"), archive);
  const auto dis = ExtractFeatures(ReadPpm(ParityDir() / "pair3_dis.ppm"), archive);
  EXPECT_EQ(LpipsPair(ref, dis, weights), 0.0);
  EXPECT_EQ(RecordedScore("pair3"), 0.0);
}

// The recorded activations alone must reproduce the recorded score.
TEST(Parity, RecordedTapsReproduceRecordedScore) {
  const auto recorded = ReadTensorContainer(ParityDir() / "pair0_taps.flpw");
  FeaturePyramid ref, dis;
  for (int i = 1; i <= 5; ++i) {
    ref.taps.push_back(FromTensor(recorded.Get("ref.tap" + std::to_string(i))));
    dis.taps.push_back(FromTensor(recorded.Get("dis.tap" + std::to_string(i))));
  }
  const auto weights = LpipsLinearWeights::FromArchive(SharedArchive());
  EXPECT_NEAR(LpipsPair(ref, dis, weights), RecordedScore("pair0"), 1e-6);
}

TEST(Parity, ArchiveShapes) {
  const auto& archive = SharedArchive();
  EXPECT_EQ(archive.tap_channels(), (std::vector<int>{64, 192, 384, 256, 256}));
  // conv 11/4 pad 2 -> 7, pool -> 3, pool -> 1: (31 + 4 - 11) / 4 + 1 = 7
  EXPECT_EQ(MinimumInputSize(archive), 31);
}

}  // namespace
}  // namespace flowqa
