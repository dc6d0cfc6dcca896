#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flowqa/error.hpp"
#include "flowqa/lpips.hpp"
#include "test_support.hpp"

namespace flowqa {
namespace {

using testing::RandomFeatureMap;

struct Toy {
  FeaturePyramid ref, dis;
  LpipsLinearWeights w;
};

// Five layers with shrinking spatial size, like a real trunk.
Toy RandomToy(std::mt19937& rng) {
  const int channels[5] = {3, 5, 4, 2, 6};
  const int sizes[5] = {17, 9, 5, 5, 3};
  std::uniform_real_distribution<float> wd(0.0f, 1.0f);
  Toy t;
  for (int l = 0; l < 5; ++l) {
    t.ref.taps.push_back(RandomFeatureMap(channels[l], sizes[l], sizes[l] + 1, rng, 0.0f, 2.0f));
    t.dis.taps.push_back(RandomFeatureMap(channels[l], sizes[l], sizes[l] + 1, rng, 0.0f, 2.0f));
    std::vector<float> w(channels[l]);
    for (float& v : w) v = wd(rng);
    t.w.layers.push_back(w);
  }
  return t;
}

// d at every location, computed straight from the definition.
std::vector<double> OracleDistance(const FeatureMap& a, const FeatureMap& b, const std::vector<float>& w) {
  std::vector<double> d(a.plane_size(), 0.0);
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      double na = 0, nb = 0;
      for (int c = 0; c < a.channels; ++c) {
        na += static_cast<double>(a.at(c, y, x)) * a.at(c, y, x);
        nb += static_cast<double>(b.at(c, y, x)) * b.at(c, y, x);
      }
      na = std::sqrt(na) + 1e-10;
      nb = std::sqrt(nb) + 1e-10;
      double s = 0;
      for (int c = 0; c < a.channels; ++c) {
        const double diff = w[c] * (a.at(c, y, x) / na - b.at(c, y, x) / nb);
        s += diff * diff;
      }
      d[static_cast<size_t>(y) * a.width + x] = s;
    }
  return d;
}

TEST(ChannelNormalize, ThreeFourFive) {
  FeatureMap m(2, 1, 1);
  m.data = {3.0f, 4.0f};
  const FeatureMap n = ChannelNormalize(m);
  EXPECT_NEAR(n.data[0], 0.6, 1e-7);
  EXPECT_NEAR(n.data[1], 0.8, 1e-7);
}

TEST(ChannelNormalize, ZeroVectorStaysZero) {
  const FeatureMap n = ChannelNormalize(FeatureMap(4, 2, 2, 0.0f));
  for (float v : n.data) {
    EXPECT_FALSE(std::isnan(v));
    EXPECT_EQ(v, 0.0f);
  }
}

TEST(ChannelNormalize, RandomNormsAreUnitOrZero) {
  std::mt19937 rng(7);
  FeatureMap m = RandomFeatureMap(6, 5, 5, rng);
  for (int c = 0; c < 6; ++c) m.at(c, 2, 2) = 0.0f;
  const FeatureMap n = ChannelNormalize(m);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      double s = 0;
      for (int c = 0; c < 6; ++c) s += static_cast<double>(n.at(c, y, x)) * n.at(c, y, x);
      const double norm = std::sqrt(s);
      if (x == 2 && y == 2) EXPECT_EQ(norm, 0.0);
      else EXPECT_TRUE(norm >= 1 - 1e-6 && norm <= 1 + 1e-7) << norm;
    }
}

TEST(LpipsPair, IdenticalIsZero) {
  std::mt19937 rng(1);
  const Toy t = RandomToy(rng);
  EXPECT_EQ(LpipsPair(t.ref, t.ref, t.w), 0.0);
}

// ref (3,4) -> (0.6,0.8), dis (4,3) -> (0.8,0.6), w (1,2): 0.2^2 + 0.4^2 = 0.2 at one of two locations.
TEST(LpipsPair, HandComputedToy) {
  FeaturePyramid ref, dis;
  FeatureMap a(2, 1, 2), b(2, 1, 2);
  a.at(0, 0, 0) = 3;
  a.at(1, 0, 0) = 4;
  b.at(0, 0, 0) = 4;
  b.at(1, 0, 0) = 3;
  a.at(0, 0, 1) = b.at(0, 0, 1) = 1;
  a.at(1, 0, 1) = b.at(1, 0, 1) = 1;
  ref.taps = {a};
  dis.taps = {b};
  LpipsLinearWeights w{{{1.0f, 2.0f}}};
  EXPECT_NEAR(LpipsPair(ref, dis, w), 0.1, 1e-7);
}

TEST(LpipsPair, MatchesOracle) {
  std::mt19937 rng(2);
  const Toy t = RandomToy(rng);
  double want = 0;
  for (int l = 0; l < 5; ++l) {
    const auto d = OracleDistance(t.ref.taps[l], t.dis.taps[l], t.w.layers[l]);
    double s = 0;
    for (double v : d) s += v;
    want += s / d.size();
  }
  EXPECT_NEAR(LpipsPair(t.ref, t.dis, t.w), want, 1e-6);
}

TEST(LpipsPair, ShapeMismatchNamesLayer) {
  std::mt19937 rng(3);
  Toy t = RandomToy(rng);
  t.dis.taps[2] = RandomFeatureMap(4, 4, 4, rng);
  try {
    LpipsPair(t.ref, t.dis, t.w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
}

TEST(WeightedLpips, UniformReducesToPlainOnRandomToys) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Toy t = RandomToy(rng);
    // frame-resolution map, larger than every layer
    const WeightMap uniform = WeightMap::Uniform(70 + trial, 66);
    EXPECT_NEAR(WeightedLpipsPair(t.ref, t.dis, t.w, uniform), LpipsPair(t.ref, t.dis, t.w), 1e-6);
  }
}

TEST(WeightedLpips, DeltaPicksOneLocation) {
  std::mt19937 rng(5);
  const FeatureMap a = RandomFeatureMap(3, 4, 5, rng), b = RandomFeatureMap(3, 4, 5, rng);
  const std::vector<float> w = {0.5f, 1.0f, 0.25f};
  FeaturePyramid ref{{a}}, dis{{b}};
  std::vector<double> mass(20, 0.0);
  mass[13] = 1.0;
  const double got = WeightedLpipsPair(ref, dis, LpipsLinearWeights{{w}}, WeightMap::FromMass(5, 4, mass));
  EXPECT_NEAR(got, OracleDistance(a, b, w)[13], 1e-6);
  EXPECT_EQ(got, LayerDistanceMap(a, b, w)[13]);
}

TEST(WeightedLpips, RandomMapMatchesDoubleLoop) {
  std::mt19937 rng(6);
  const FeatureMap a = RandomFeatureMap(4, 6, 7, rng), b = RandomFeatureMap(4, 6, 7, rng);
  const std::vector<float> w = {0.5f, 1.0f, 0.25f, 2.0f};
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> mass(42);
  for (double& m : mass) m = dist(rng);
  const WeightMap map = WeightMap::FromMass(7, 6, mass);
  const auto d = OracleDistance(a, b, w);
  double want = 0;
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 7; ++x) want += map.at(x, y) * d[y * 7 + x];
  EXPECT_NEAR(WeightedLpipsPair(FeaturePyramid{{a}}, FeaturePyramid{{b}}, LpipsLinearWeights{{w}}, map), want, 1e-6);
}

TEST(WeightedLpips, MoreWeightOnWorstLocationNeverLowersScore) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureMap a = RandomFeatureMap(3, 5, 5, rng), b = RandomFeatureMap(3, 5, 5, rng);
    const std::vector<float> w = {1.0f, 0.5f, 0.75f};
    const auto d = LayerDistanceMap(a, b, w);
    const size_t worst = std::max_element(d.begin(), d.end()) - d.begin();
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    std::vector<double> mass(25);
    for (double& m : mass) m = dist(rng);
    const FeaturePyramid ref{{a}}, dis{{b}};
    const LpipsLinearWeights lw{{w}};
    const double before = WeightedLpipsPair(ref, dis, lw, WeightMap::FromMass(5, 5, mass));
    mass[worst] += 2.0;
    const double after = WeightedLpipsPair(ref, dis, lw, WeightMap::FromMass(5, 5, mass));
    EXPECT_GE(after, before);
  }
}

TEST(WeightedLpips, RejectsUnnormalizedMap) {
  std::mt19937 rng(9);
  const Toy t = RandomToy(rng);
  WeightMap m = WeightMap::Uniform(20, 20);
  for (double& v : m.w) v *= 0.5;
  EXPECT_THROW(WeightedLpipsPair(t.ref, t.dis, t.w, m), Error);
}

TEST(WeightedLpips, NonNegative) {
  std::mt19937 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Toy t = RandomToy(rng);
    EXPECT_GE(LpipsPair(t.ref, t.dis, t.w), 0.0);
    const WeightMap m = WeightMap::FromMass(4, 4, {1, 0, 0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1});
    EXPECT_GE(WeightedLpipsPair(t.ref, t.dis, t.w, m), 0.0);
  }
}

}  // namespace
}  // namespace flowqa
