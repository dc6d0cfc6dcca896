#pragma once

#include <vector>

#include "flowqa/nn.hpp"
#include "flowqa/weight_map.hpp"

namespace flowqa {

// Per-layer non-negative channel scales w_l; the distance at a location is
// sum_c (w_c * (a_c - b_c))^2 over channel-normalized features a, b.
struct LpipsLinearWeights {
  std::vector<std::vector<float>> layers;

  static LpipsLinearWeights FromArchive(const WeightArchive& archive);
  void Validate() const;
};

inline constexpr float kChannelNormEpsilon = 1e-10f;

// Divides each location's channel vector by (its Euclidean norm + 1e-10).
FeatureMap ChannelNormalize(const FeatureMap& fmap);

// Squared weighted difference of normalized features at every location of one layer (H x W).
std::vector<double> LayerDistanceMap(const FeatureMap& ref, const FeatureMap& dis, const std::vector<float>& w);

// Spatial mean of the distance map, summed over layers.
double LpipsPair(const FeaturePyramid& ref, const FeaturePyramid& dis, const LpipsLinearWeights& w);

// Weighted mean: the map is resampled to each layer's resolution and renormalized, then
// sum_hw map_hw * d_hw per layer, summed over layers.
double WeightedLpipsPair(const FeaturePyramid& ref, const FeaturePyramid& dis, const LpipsLinearWeights& w,
                         const WeightMap& weight_map);

}  // namespace flowqa
