#include "flowqa/lpips.hpp"

#include <cmath>

#include "flowqa/error.hpp"

namespace flowqa {

LpipsLinearWeights LpipsLinearWeights::FromArchive(const WeightArchive& archive) {
  LpipsLinearWeights w;
  w.layers = archive.linear();
  return w;
}

void LpipsLinearWeights::Validate() const {
  for (const auto& layer : layers)
    for (float v : layer)
      if (!(v >= 0.0f) || !std::isfinite(v)) Fail(ErrorKind::kArgument, "lpips weights must be finite and >= 0");
}

FeatureMap ChannelNormalize(const FeatureMap& fmap) {
  FeatureMap out(fmap.channels, fmap.height, fmap.width);
  const size_t hw = fmap.plane_size();
  std::vector<float> norm(hw, 0.0f);
  for (int c = 0; c < fmap.channels; ++c) {
    const float* src = fmap.data.data() + c * hw;
    for (size_t i = 0; i < hw; ++i) norm[i] += src[i] * src[i];
  }
  for (float& n : norm) n = std::sqrt(n) + kChannelNormEpsilon;
  for (int c = 0; c < fmap.channels; ++c) {
    const float* src = fmap.data.data() + c * hw;
    float* dst = out.data.data() + c * hw;
    for (size_t i = 0; i < hw; ++i) dst[i] = src[i] / norm[i];
  }
  return out;
}

std::vector<double> LayerDistanceMap(const FeatureMap& ref, const FeatureMap& dis, const std::vector<float>& w) {
  if (!ref.SameShape(dis)) Fail(ErrorKind::kShape, "lpips: feature maps differ in shape");
  if (w.size() != static_cast<size_t>(ref.channels)) {
    Fail(ErrorKind::kShape, "lpips: " + std::to_string(w.size()) + " linear weights for " +
                                std::to_string(ref.channels) + " channels");
  }
  const FeatureMap a = ChannelNormalize(ref);
  const FeatureMap b = ChannelNormalize(dis);
  const size_t hw = ref.plane_size();
  std::vector<double> d(hw, 0.0);
  for (int c = 0; c < ref.channels; ++c) {
    const float* pa = a.data.data() + c * hw;
    const float* pb = b.data.data() + c * hw;
    const double wc = w[c];
    for (size_t i = 0; i < hw; ++i) {
      const double diff = wc * (static_cast<double>(pa[i]) - pb[i]);
      d[i] += diff * diff;
    }
  }
  return d;
}

namespace {

void CheckPyramids(const FeaturePyramid& ref, const FeaturePyramid& dis, const LpipsLinearWeights& w) {
  if (ref.taps.size() != dis.taps.size() || ref.taps.size() != w.layers.size()) {
    Fail(ErrorKind::kShape, "lpips: pyramids/weights disagree on layer count (" + std::to_string(ref.taps.size()) +
                                ", " + std::to_string(dis.taps.size()) + ", " + std::to_string(w.layers.size()) + ")");
  }
  for (size_t l = 0; l < ref.taps.size(); ++l) {
    if (!ref.taps[l].SameShape(dis.taps[l])) {
      Fail(ErrorKind::kShape, "lpips: layer " + std::to_string(l + 1) + " shapes differ");
    }
  }
}

}  // namespace

double LpipsPair(const FeaturePyramid& ref, const FeaturePyramid& dis, const LpipsLinearWeights& w) {
  CheckPyramids(ref, dis, w);
  double total = 0.0;
  for (size_t l = 0; l < ref.taps.size(); ++l) {
    const auto d = LayerDistanceMap(ref.taps[l], dis.taps[l], w.layers[l]);
    double sum = 0.0;
    for (double v : d) sum += v;
    total += sum / static_cast<double>(d.size());
  }
  return total;
}

double WeightedLpipsPair(const FeaturePyramid& ref, const FeaturePyramid& dis, const LpipsLinearWeights& w,
                         const WeightMap& weight_map) {
  CheckPyramids(ref, dis, w);
  weight_map.Validate();
  double total = 0.0;
  for (size_t l = 0; l < ref.taps.size(); ++l) {
    const FeatureMap& tap = ref.taps[l];
    const auto d = LayerDistanceMap(tap, dis.taps[l], w.layers[l]);
    const WeightMap lw = ResampleWeightMap(weight_map, tap.width, tap.height);
    double sum = 0.0;
    for (size_t i = 0; i < d.size(); ++i) sum += lw.w[i] * d[i];
    total += sum;
  }
  return total;
}

}  // namespace flowqa
