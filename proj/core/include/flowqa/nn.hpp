#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flowqa/frame.hpp"
#include "flowqa/tensor_archive.hpp"

namespace flowqa {

// C x H x W activations, channel-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {}

  size_t plane_size() const { return static_cast<size_t>(height) * width; }
  float& at(int c, int y, int x) { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
  bool SameShape(const FeatureMap& o) const { return channels == o.channels && height == o.height && width == o.width; }
  bool operator==(const FeatureMap&) const = default;
};

struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  std::vector<float> weight;  // [out][in][kh][kw]
  std::vector<float> bias;    // [out]

  size_t patch_size() const { return static_cast<size_t>(in_channels) * kernel_h * kernel_w; }
};

// Output spatial extent of a strided window op; <= 0 when the input is too small.
constexpr int ConvOutputSize(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  return span < 0 ? 0 : span / stride + 1;
}

// Reference cross-correlation with zero padding, one output at a time.
FeatureMap Conv2dDirect(const FeatureMap& input, const ConvWeights& conv, int stride, int padding);
// im2col + blocked multiply-accumulate; same arithmetic contract as Conv2dDirect.
FeatureMap Conv2d(const FeatureMap& input, const ConvWeights& conv, int stride, int padding);

FeatureMap Relu(FeatureMap input);
FeatureMap MaxPool(const FeatureMap& input, int kernel = 3, int stride = 2);

enum class LayerOp { kConv, kRelu, kMaxPool };

struct LayerSpec {
  LayerOp op = LayerOp::kRelu;
  std::string weight;          // conv only
  std::string bias;            // conv only
  std::array<int, 4> kernel{}; // conv: out,in,kh,kw; maxpool: kh,kw,0,0
  int stride = 1;
  int padding = 0;
  bool tap = false;
};

// Trunk parameters plus LPIPS linear weights, validated against the manifest.
class WeightArchive {
 public:
  static constexpr int kTapCount = 5;

  static WeightArchive FromContainer(TensorContainer container);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  // Conv parameters, indexed like layers(); empty for non-conv layers.
  const ConvWeights& conv(size_t layer) const { return convs_.at(layer); }
  const std::vector<std::vector<float>>& linear() const { return linear_; }
  const std::array<float, 3>& shift() const { return shift_; }
  const std::array<float, 3>& scale() const { return scale_; }
  const TensorContainer& container() const { return container_; }
  // Channel count of each tap, in order.
  std::vector<int> tap_channels() const;

 private:
  TensorContainer container_;
  std::vector<LayerSpec> layers_;
  std::vector<ConvWeights> convs_;
  std::vector<std::vector<float>> linear_;
  std::array<float, 3> shift_{};
  std::array<float, 3> scale_{};
};

WeightArchive LoadWeightArchive(const std::filesystem::path& path);
WeightArchive ParseWeightArchive(std::span<const uint8_t> bytes);

struct FeaturePyramid {
  std::vector<FeatureMap> taps;
};

// Smallest square input for which every layer of the archive's trunk yields >= 1x1.
int MinimumInputSize(const WeightArchive& archive);

// Runs the trunk on an RGB_FLOAT frame: [0,1] -> [-1,1] -> (x - shift) / scale, then the
// manifest layers. Returns the post-activation outputs flagged as taps.
FeaturePyramid ExtractFeatures(const Frame& rgb, const WeightArchive& archive);

}  // namespace flowqa
