#include "flowqa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "flowqa/error.hpp"
#include "flowqa/media_io.hpp"

namespace flowqa {

namespace {

void CheckConvInput(const FeatureMap& input, const ConvWeights& conv) {
  if (input.channels != conv.in_channels) {
    Fail(ErrorKind::kShape, "conv2d: kernel expects " + std::to_string(conv.in_channels) + " input channels, got " +
                                std::to_string(input.channels));
  }
  if (conv.weight.size() != static_cast<size_t>(conv.out_channels) * conv.patch_size()) {
    Fail(ErrorKind::kShape, "conv2d: weight buffer does not match kernel shape");
  }
  if (!conv.bias.empty() && conv.bias.size() != static_cast<size_t>(conv.out_channels)) {
    Fail(ErrorKind::kShape, "conv2d: bias length does not match output channels");
  }
}

float BiasOf(const ConvWeights& conv, int oc) { return conv.bias.empty() ? 0.0f : conv.bias[oc]; }

// Output rows processed per im2col tile; keeps the column buffer near 4k positions.
constexpr int kTargetTilePositions = 4096;
constexpr int kPositionBlock = 256;
constexpr int kChannelBlock = 4;

}  // namespace

FeatureMap Conv2dDirect(const FeatureMap& input, const ConvWeights& conv, int stride, int padding) {
  CheckConvInput(input, conv);
  const int oh = ConvOutputSize(input.height, conv.kernel_h, stride, padding);
  const int ow = ConvOutputSize(input.width, conv.kernel_w, stride, padding);
  if (oh <= 0 || ow <= 0) Fail(ErrorKind::kShape, "conv2d: input smaller than kernel");
  FeatureMap out(conv.out_channels, oh, ow);
  for (int oc = 0; oc < conv.out_channels; ++oc) {
    const float* w = conv.weight.data() + oc * conv.patch_size();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = BiasOf(conv, oc);
        for (int ic = 0; ic < conv.in_channels; ++ic) {
          for (int ky = 0; ky < conv.kernel_h; ++ky) {
            const int iy = oy * stride - padding + ky;
            for (int kx = 0; kx < conv.kernel_w; ++kx) {
              const int ix = ox * stride - padding + kx;
              const float v = (iy < 0 || iy >= input.height || ix < 0 || ix >= input.width) ? 0.0f
                                                                                             : input.at(ic, iy, ix);
              acc += static_cast<double>(w[(ic * conv.kernel_h + ky) * conv.kernel_w + kx]) * v;
            }
          }
        }
        out.at(oc, oy, ox) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

FeatureMap Conv2d(const FeatureMap& input, const ConvWeights& conv, int stride, int padding) {
  CheckConvInput(input, conv);
  const int oh = ConvOutputSize(input.height, conv.kernel_h, stride, padding);
  const int ow = ConvOutputSize(input.width, conv.kernel_w, stride, padding);
  if (oh <= 0 || ow <= 0) Fail(ErrorKind::kShape, "conv2d: input smaller than kernel");
  FeatureMap out(conv.out_channels, oh, ow);

  const size_t K = conv.patch_size();
  const int rows_per_tile = std::max(1, kTargetTilePositions / ow);
  std::vector<float> col;
  // float products, double sums: long dot products otherwise drift past 1e-6 relative
  std::vector<double> acc(static_cast<size_t>(kChannelBlock) * kPositionBlock);

  for (int oy0 = 0; oy0 < oh; oy0 += rows_per_tile) {
    const int oy1 = std::min(oh, oy0 + rows_per_tile);
    const size_t P = static_cast<size_t>(oy1 - oy0) * ow;
    col.assign(K * P, 0.0f);
    // im2col: row k = (ic, ky, kx), column p = output position within the tile.
    for (int ic = 0; ic < conv.in_channels; ++ic) {
      for (int ky = 0; ky < conv.kernel_h; ++ky) {
        for (int kx = 0; kx < conv.kernel_w; ++kx) {
          float* dst = col.data() + ((static_cast<size_t>(ic) * conv.kernel_h + ky) * conv.kernel_w + kx) * P;
          for (int oy = oy0; oy < oy1; ++oy) {
            const int iy = oy * stride - padding + ky;
            float* row = dst + static_cast<size_t>(oy - oy0) * ow;
            if (iy < 0 || iy >= input.height) continue;
            const float* src = &input.data[(static_cast<size_t>(ic) * input.height + iy) * input.width];
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - padding + kx;
              if (ix >= 0 && ix < input.width) row[ox] = src[ix];
            }
          }
        }
      }
    }
    for (size_t p0 = 0; p0 < P; p0 += kPositionBlock) {
      const size_t pn = std::min<size_t>(kPositionBlock, P - p0);
      for (int oc0 = 0; oc0 < conv.out_channels; oc0 += kChannelBlock) {
        const int ocn = std::min(kChannelBlock, conv.out_channels - oc0);
        for (int j = 0; j < ocn; ++j) std::fill_n(acc.data() + j * kPositionBlock, pn, BiasOf(conv, oc0 + j));
        for (size_t k = 0; k < K; ++k) {
          const float* c = col.data() + k * P + p0;
          for (int j = 0; j < ocn; ++j) {
            const float w = conv.weight[(oc0 + j) * K + k];
            double* a = acc.data() + j * kPositionBlock;
            for (size_t p = 0; p < pn; ++p) a[p] += static_cast<double>(w * c[p]);
          }
        }
        for (int j = 0; j < ocn; ++j) {
          float* dst = &out.data[(static_cast<size_t>(oc0 + j) * oh + oy0) * ow + p0];
          const double* a = acc.data() + j * kPositionBlock;
          for (size_t p = 0; p < pn; ++p) dst[p] = static_cast<float>(a[p]);
        }
      }
    }
  }
  return out;
}

FeatureMap Relu(FeatureMap input) {
  for (float& v : input.data) v = v > 0.0f ? v : 0.0f;
  return input;
}

FeatureMap MaxPool(const FeatureMap& input, int kernel, int stride) {
  const int oh = ConvOutputSize(input.height, kernel, stride, 0);
  const int ow = ConvOutputSize(input.width, kernel, stride, 0);
  if (oh <= 0 || ow <= 0) Fail(ErrorKind::kShape, "maxpool: input smaller than window");
  FeatureMap out(input.channels, oh, ow);
  for (int c = 0; c < input.channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        float m = -std::numeric_limits<float>::infinity();
        for (int ky = 0; ky < kernel; ++ky)
          for (int kx = 0; kx < kernel; ++kx) m = std::max(m, input.at(c, oy * stride + ky, ox * stride + kx));
        out.at(c, oy, ox) = m;
      }
    }
  }
  return out;
}

// --- archive -------------------------------------------------------------------

namespace {

const Tensor& RequireShape(const TensorContainer& c, const std::string& name, const std::vector<uint32_t>& dims) {
  const Tensor* t = c.Find(name);
  if (t == nullptr) Fail(ErrorKind::kFormat, "weight archive: manifest references missing entry '" + name + "'");
  if (t->dims != dims) {
    std::string want, got;
    for (auto d : dims) want += std::to_string(d) + " ";
    for (auto d : t->dims) got += std::to_string(d) + " ";
    Fail(ErrorKind::kFormat, "weight archive: entry '" + name + "' has shape [ " + got + "], manifest expects [ " +
                                 want + "]");
  }
  return *t;
}

LayerSpec ParseLayer(const nlohmann::json& j) {
  LayerSpec spec;
  const std::string op = j.at("op").get<std::string>();
  spec.tap = j.value("tap", false);
  if (op == "conv") {
    spec.op = LayerOp::kConv;
    spec.weight = j.at("weight").get<std::string>();
    spec.bias = j.value("bias", std::string());
    const auto k = j.at("kernel").get<std::vector<int>>();
    if (k.size() != 4) Fail(ErrorKind::kFormat, "weight archive: conv kernel shape must have 4 dims");
    std::copy(k.begin(), k.end(), spec.kernel.begin());
    spec.stride = j.value("stride", 1);
    spec.padding = j.value("padding", 0);
  } else if (op == "relu") {
    spec.op = LayerOp::kRelu;
  } else if (op == "maxpool") {
    spec.op = LayerOp::kMaxPool;
    const auto k = j.at("kernel").get<std::vector<int>>();
    if (k.empty() || k.size() > 2) Fail(ErrorKind::kFormat, "weight archive: maxpool kernel must have 1 or 2 dims");
    spec.kernel = {k[0], k.size() == 2 ? k[1] : k[0], 0, 0};
    if (spec.kernel[0] != spec.kernel[1]) Fail(ErrorKind::kUnsupported, "weight archive: non-square maxpool");
    spec.stride = j.value("stride", spec.kernel[0]);
    spec.padding = j.value("padding", 0);
    if (spec.padding != 0) Fail(ErrorKind::kUnsupported, "weight archive: padded maxpool");
  } else {
    Fail(ErrorKind::kUnsupported, "weight archive: unknown layer op '" + op + "'");
  }
  if (spec.stride <= 0 || spec.padding < 0) Fail(ErrorKind::kFormat, "weight archive: bad stride/padding");
  return spec;
}

}  // namespace

WeightArchive WeightArchive::FromContainer(TensorContainer container) {
  WeightArchive a;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(container.manifest);
    for (const auto& layer : manifest.at("layers")) a.layers_.push_back(ParseLayer(layer));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("weight archive: bad manifest: ") + e.what());
  }

  int channels = 3;
  std::vector<int> tap_channels;
  a.convs_.resize(a.layers_.size());
  for (size_t i = 0; i < a.layers_.size(); ++i) {
    const LayerSpec& l = a.layers_[i];
    if (l.op == LayerOp::kConv) {
      const auto& k = l.kernel;
      if (k[1] != channels) {
        Fail(ErrorKind::kFormat, "weight archive: '" + l.weight + "' expects " + std::to_string(k[1]) +
                                     " input channels but the trunk carries " + std::to_string(channels));
      }
      const std::vector<uint32_t> dims(k.begin(), k.end());
      ConvWeights& cw = a.convs_[i];
      cw.out_channels = k[0];
      cw.in_channels = k[1];
      cw.kernel_h = k[2];
      cw.kernel_w = k[3];
      cw.weight = RequireShape(container, l.weight, dims).data;
      if (!l.bias.empty()) cw.bias = RequireShape(container, l.bias, {static_cast<uint32_t>(k[0])}).data;
      channels = k[0];
    }
    if (l.tap) tap_channels.push_back(channels);
  }
  if (tap_channels.size() != static_cast<size_t>(kTapCount)) {
    Fail(ErrorKind::kFormat, "weight archive: manifest flags " + std::to_string(tap_channels.size()) +
                                 " taps, expected " + std::to_string(kTapCount));
  }

  std::vector<std::string> linear_names;
  std::string shift_name = "norm.shift", scale_name = "norm.scale";
  try {
    linear_names = manifest.at("linear").get<std::vector<std::string>>();
    if (manifest.contains("normalization")) {
      shift_name = manifest["normalization"].value("shift", shift_name);
      scale_name = manifest["normalization"].value("scale", scale_name);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kFormat, std::string("weight archive: bad manifest: ") + e.what());
  }
  if (linear_names.size() != tap_channels.size()) {
    Fail(ErrorKind::kFormat, "weight archive: " + std::to_string(linear_names.size()) + " linear vectors for " +
                                 std::to_string(tap_channels.size()) + " taps");
  }
  for (size_t i = 0; i < linear_names.size(); ++i) {
    const Tensor& t = RequireShape(container, linear_names[i], {static_cast<uint32_t>(tap_channels[i])});
    for (float v : t.data) {
      if (!(v >= 0.0f) || !std::isfinite(v)) {
        Fail(ErrorKind::kFormat, "weight archive: '" + linear_names[i] + "' has a negative or non-finite weight");
      }
    }
    a.linear_.push_back(t.data);
  }
  const Tensor& shift = RequireShape(container, shift_name, {3});
  const Tensor& scale = RequireShape(container, scale_name, {3});
  for (int c = 0; c < 3; ++c) {
    a.shift_[c] = shift.data[c];
    a.scale_[c] = scale.data[c];
    if (scale.data[c] == 0.0f) Fail(ErrorKind::kFormat, "weight archive: zero normalization scale");
  }
  a.container_ = std::move(container);
  return a;
}

std::vector<int> WeightArchive::tap_channels() const {
  std::vector<int> out;
  out.reserve(linear_.size());
  for (const auto& l : linear_) out.push_back(static_cast<int>(l.size()));
  return out;
}

WeightArchive LoadWeightArchive(const std::filesystem::path& path) {
  return WeightArchive::FromContainer(ReadTensorContainer(path));
}

WeightArchive ParseWeightArchive(std::span<const uint8_t> bytes) {
  return WeightArchive::FromContainer(ParseTensorContainer(bytes));
}

// --- extraction -------------------------------------------------------------------

namespace {

bool TrunkFits(const WeightArchive& archive, int h, int w) {
  for (const LayerSpec& l : archive.layers()) {
    if (l.op == LayerOp::kConv) {
      h = ConvOutputSize(h, l.kernel[2], l.stride, l.padding);
      w = ConvOutputSize(w, l.kernel[3], l.stride, l.padding);
    } else if (l.op == LayerOp::kMaxPool) {
      h = ConvOutputSize(h, l.kernel[0], l.stride, 0);
      w = ConvOutputSize(w, l.kernel[1], l.stride, 0);
    }
    if (h < 1 || w < 1) return false;
  }
  return true;
}

}  // namespace

int MinimumInputSize(const WeightArchive& archive) {
  for (int s = 1; s < 1 << 16; ++s)
    if (TrunkFits(archive, s, s)) return s;
  Fail(ErrorKind::kComputation, "trunk never produces a non-empty output");
}

FeaturePyramid ExtractFeatures(const Frame& rgb, const WeightArchive& archive) {
  if (rgb.colorspace() != ColorSpace::kRgbFloat) Fail(ErrorKind::kArgument, "extract_features: expected an RGB frame");
  if (!TrunkFits(archive, rgb.height(), rgb.width())) {
    const int min_size = MinimumInputSize(archive);
    Fail(ErrorKind::kShape, "extract_features: frame " + std::to_string(rgb.width()) + "x" +
                                std::to_string(rgb.height()) + " is too small; minimum is " +
                                std::to_string(min_size) + "x" + std::to_string(min_size));
  }
  FeatureMap x(3, rgb.height(), rgb.width());
  for (int c = 0; c < 3; ++c) {
    const auto& src = rgb.plane(c).data;
    float* dst = x.data.data() + c * x.plane_size();
    const float shift = archive.shift()[c];
    const float scale = archive.scale()[c];
    for (size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] * 2.0f - 1.0f - shift) / scale;
  }
  FeaturePyramid pyramid;
  const auto& layers = archive.layers();
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.op) {
      case LayerOp::kConv: x = Conv2d(x, archive.conv(i), l.stride, l.padding); break;
      case LayerOp::kRelu: x = Relu(std::move(x)); break;
      case LayerOp::kMaxPool: x = MaxPool(x, l.kernel[0], l.stride); break;
    }
    if (l.tap) pyramid.taps.push_back(x);
  }
  return pyramid;
}

}  // namespace flowqa
