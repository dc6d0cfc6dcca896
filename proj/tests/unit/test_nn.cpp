#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>

#include "flowqa/error.hpp"
#include "flowqa/nn.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace flowqa {
namespace {

using testing::MaxRelativeError;
using testing::NaiveConv;
using testing::RandomConv;
using testing::RandomFeatureMap;
using testing::SharedArchive;

TEST(Conv, FastAndDirectMatchNaiveOnRandomShapes) {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<int> ch(1, 4), sz(1, 16), kern(1, 5), strd(1, 4), padd(0, 2), oc(1, 6);
  int done = 0;
  while (done < 50) {
    const int c = ch(rng), h = sz(rng), w = sz(rng), k = kern(rng), s = strd(rng), p = padd(rng);
    if (h + 2 * p < k || w + 2 * p < k) continue;
    const FeatureMap in = RandomFeatureMap(c, h, w, rng);
    const ConvWeights conv = RandomConv(oc(rng), c, k, k, rng);
    const FeatureMap want = NaiveConv(in, conv, s, p);
    const FeatureMap fast = Conv2d(in, conv, s, p);
    const FeatureMap direct = Conv2dDirect(in, conv, s, p);
    ASSERT_TRUE(fast.SameShape(want));
    ASSERT_TRUE(direct.SameShape(want));
    EXPECT_LE(MaxRelativeError(fast, want), 1e-6) << c << "x" << h << "x" << w << " k" << k << " s" << s << " p" << p;
    EXPECT_LE(MaxRelativeError(direct, want), 1e-6);
    ++done;
  }
}

// Enough output positions to cross the im2col tile boundary.
TEST(Conv, LargeInputCrossesTiles) {
  std::mt19937 rng(5);
  const FeatureMap in = RandomFeatureMap(3, 90, 80, rng);
  const ConvWeights conv = RandomConv(9, 3, 3, 3, rng);
  EXPECT_LE(MaxRelativeError(Conv2d(in, conv, 1, 1), NaiveConv(in, conv, 1, 1)), 1e-6);
}

TEST(Conv, ChannelMismatch) {
  std::mt19937 rng(2);
  const FeatureMap in = RandomFeatureMap(2, 8, 8, rng);
  const ConvWeights conv = RandomConv(2, 3, 3, 3, rng);
  try {
    Conv2d(in, conv, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
}

TEST(Conv, IdentityKernel) {
  std::mt19937 rng(6);
  const FeatureMap in = RandomFeatureMap(1, 3, 3, rng);
  ConvWeights k{1, 1, 1, 1, {1.0f}, {0.0f}};
  EXPECT_EQ(Conv2d(in, k, 1, 0), in);
}

TEST(Conv, OnesKernelSumsWindow) {
  const FeatureMap in(1, 4, 4, 1.0f);
  ConvWeights k{1, 1, 3, 3, std::vector<float>(9, 1.0f), {0.0f}};
  const FeatureMap out = Conv2d(in, k, 1, 0);
  ASSERT_EQ(out.height, 2);
  ASSERT_EQ(out.width, 2);
  for (float v : out.data) EXPECT_EQ(v, 9.0f);
}

TEST(Conv, OutputSize) {
  EXPECT_EQ(ConvOutputSize(224, 11, 4, 2), 55);
  EXPECT_EQ(ConvOutputSize(27, 5, 1, 2), 27);
  EXPECT_LE(ConvOutputSize(2, 3, 1, 0), 0);
}

TEST(Relu, ClampsNegatives) {
  FeatureMap m(1, 1, 4);
  m.data = {-1.0f, 0.0f, 2.5f, -0.0f};
  const FeatureMap r = Relu(m);
  EXPECT_EQ(r.data, (std::vector<float>{0.0f, 0.0f, 2.5f, 0.0f}));
}

TEST(MaxPool, MatchesWindowMaxOracle) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 3 + trial % 9, w = 3 + (trial * 5) % 11;
    const FeatureMap in = RandomFeatureMap(2, h, w, rng);
    const FeatureMap out = MaxPool(in, 3, 2);
    ASSERT_EQ(out.height, (h - 3) / 2 + 1);
    ASSERT_EQ(out.width, (w - 3) / 2 + 1);
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
          float m = -std::numeric_limits<float>::infinity();
          for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx) m = std::max(m, in.at(c, 2 * y + dy, 2 * x + dx));
          EXPECT_EQ(out.at(c, y, x), m);
        }
  }
}

TEST(MaxPool, OneToNine) {
  FeatureMap m(1, 3, 3);
  for (int i = 0; i < 9; ++i) m.data[i] = static_cast<float>(i + 1);
  const FeatureMap out = MaxPool(m, 3, 2);
  ASSERT_EQ(out.data.size(), 1u);
  EXPECT_EQ(out.data[0], 9.0f);
}

TEST(MaxPool, TooSmall) { EXPECT_THROW(MaxPool(FeatureMap(1, 2, 5), 3, 2), Error); }

// --- archive validation ---------------------------------------------------------------

TensorContainer ShippedContainer() { return SharedArchive().container(); }

ErrorKind KindOf(const TensorContainer& c, std::string* message = nullptr) {
  try {
    WeightArchive::FromContainer(c);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "archive accepted";
  return ErrorKind::kComputation;
}

Tensor* Entry(TensorContainer& c, const std::string& name) {
  for (auto& t : c.entries)
    if (t.name == name) return &t;
  return nullptr;
}

TEST(WeightArchive, ShippedArchiveLoads) {
  const auto& a = SharedArchive();
  int conv_w = 0, conv_b = 0, lin = 0, norm = 0;
  for (const auto& t : a.container().entries) {
    const std::string& n = t.name;
    conv_w += n.starts_with("conv") && n.ends_with(".weight");
    conv_b += n.starts_with("conv") && n.ends_with(".bias");
    lin += n.starts_with("lin");
    norm += n.starts_with("norm.");
  }
  EXPECT_EQ(conv_w, 5);
  EXPECT_EQ(conv_b, 5);
  EXPECT_EQ(lin, 5);
  EXPECT_EQ(norm, 2);
  EXPECT_EQ(a.linear().size(), 5u);
  EXPECT_EQ(a.shift().size(), 3u);
  for (float s : a.scale()) EXPECT_GT(s, 0.0f);
}

TEST(WeightArchive, ShapeMismatchNamesEntry) {
  auto c = ShippedContainer();
  Tensor* t = Entry(c, "conv1.weight");
  ASSERT_NE(t, nullptr);
  t->dims[0] -= 1;
  t->data.resize(t->numel());
  std::string msg;
  EXPECT_EQ(KindOf(c, &msg), ErrorKind::kFormat);
  EXPECT_NE(msg.find("conv1.weight"), std::string::npos) << msg;
}

TEST(WeightArchive, MissingEntry) {
  auto c = ShippedContainer();
  std::erase_if(c.entries, [](const Tensor& t) { return t.name == "lin3.weight"; });
  std::string msg;
  EXPECT_EQ(KindOf(c, &msg), ErrorKind::kFormat);
  EXPECT_NE(msg.find("lin3.weight"), std::string::npos) << msg;
}

TEST(WeightArchive, NegativeLinearWeight) {
  auto c = ShippedContainer();
  Entry(c, "lin2.weight")->data[7] = -0.5f;
  EXPECT_EQ(KindOf(c), ErrorKind::kFormat);
}

TEST(WeightArchive, WrongTapCount) {
  auto c = ShippedContainer();
  auto manifest = nlohmann::json::parse(c.manifest);
  for (auto& layer : manifest["layers"]) {
    if (layer["tap"].get<bool>()) {
      layer["tap"] = false;
      break;
    }
  }
  c.manifest = manifest.dump();
  EXPECT_EQ(KindOf(c), ErrorKind::kFormat);
}

TEST(WeightArchive, EmptyFile) {
  try {
    ParseWeightArchive({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

TEST(WeightArchive, MalformedManifest) {
  auto c = ShippedContainer();
  c.manifest = "{not json";
  EXPECT_EQ(KindOf(c), ErrorKind::kFormat);
}

TEST(WeightArchive, RoundTripThroughBytes) {
  const auto bytes = SerializeTensorContainer(ShippedContainer());
  const WeightArchive a = ParseWeightArchive(bytes);
  EXPECT_EQ(a.tap_channels(), SharedArchive().tap_channels());
}

// --- extraction ------------------------------------------------------------------------

TEST(ExtractFeatures, PyramidShapes) {
  const auto pyr = ExtractFeatures(Frame::Rgb(64, 64, 0.2f, 0.5f, 0.7f), SharedArchive());
  ASSERT_EQ(pyr.taps.size(), 5u);
  // 64 -> conv1 15 -> pool 7 -> pool 3
  const int expect_hw[5] = {15, 7, 3, 3, 3};
  const int expect_c[5] = {64, 192, 384, 256, 256};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(pyr.taps[i].height, expect_hw[i]);
    EXPECT_EQ(pyr.taps[i].width, expect_hw[i]);
    EXPECT_EQ(pyr.taps[i].channels, expect_c[i]);
    for (float v : pyr.taps[i].data) ASSERT_GE(v, 0.0f);  // post-relu
  }
}

TEST(ExtractFeatures, TooSmallStatesMinimum) {
  try {
    ExtractFeatures(Frame::Rgb(30, 40, 0, 0, 0), SharedArchive());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("31"), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(ExtractFeatures(Frame::Rgb(31, 31, 0, 0, 0), SharedArchive()));
}

TEST(ExtractFeatures, RequiresRgb) {
  EXPECT_THROW(ExtractFeatures(Frame::Yuv420(64, 64, 16, 128, 128), SharedArchive()), Error);
}

TEST(ExtractFeatures, Deterministic) {
  const Frame f = MakeTextureCanvas(72, 72, 4).Window(0, 0, 72, 72);
  const auto a = ExtractFeatures(f, SharedArchive());
  const auto b = ExtractFeatures(f, SharedArchive());
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.taps[i], b.taps[i]);
}

}  // namespace
}  // namespace flowqa
