#include "flowqa/weight_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowqa/error.hpp"

namespace flowqa {

WeightMap WeightMap::Uniform(int width, int height, bool fallback) {
  if (width <= 0 || height <= 0) Fail(ErrorKind::kShape, "weight map must be non-empty");
  WeightMap m;
  m.width = width;
  m.height = height;
  m.w.assign(static_cast<size_t>(width) * height, 1.0 / (static_cast<double>(width) * height));
  m.uniform_fallback = fallback;
  return m;
}

WeightMap WeightMap::FromMass(int width, int height, std::vector<double> mass, double min_total) {
  if (mass.size() != static_cast<size_t>(width) * height) Fail(ErrorKind::kShape, "weight map mass has wrong size");
  double total = 0.0;
  for (double v : mass) {
    if (!(v >= 0.0) || !std::isfinite(v)) Fail(ErrorKind::kArgument, "weight map mass must be finite and >= 0");
    total += v;
  }
  if (total < min_total) return Uniform(width, height, true);
  WeightMap m;
  m.width = width;
  m.height = height;
  m.w = std::move(mass);
  for (double& v : m.w) v /= total;
  return m;
}

double WeightMap::Sum() const { return std::accumulate(w.begin(), w.end(), 0.0); }

void WeightMap::Validate() const {
  if (w.size() != static_cast<size_t>(width) * height || w.empty()) {
    Fail(ErrorKind::kShape, "weight map storage does not match its dimensions");
  }
  for (double v : w)
    if (!(v >= 0.0) || !std::isfinite(v)) Fail(ErrorKind::kArgument, "weight map has a negative or non-finite entry");
  const double s = Sum();
  if (std::abs(s - 1.0) > kSumTolerance) {
    Fail(ErrorKind::kArgument, "weight map sums to " + std::to_string(s) + ", expected 1");
  }
}

namespace {

// Row-stochastic resampling matrix from `in` samples to `out` samples.
struct AxisFilter {
  std::vector<int> first;
  std::vector<std::vector<double>> taps;
};

AxisFilter MakeTriangleFilter(int in, int out) {
  AxisFilter f;
  f.first.resize(out);
  f.taps.resize(out);
  const double scale = static_cast<double>(in) / out;
  const double support = std::max(scale, 1.0);
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * scale;
    int lo = static_cast<int>(std::floor(center - support));
    int hi = static_cast<int>(std::ceil(center + support));
    lo = std::max(lo, 0);
    hi = std::min(hi, in - 1);
    std::vector<double> w;
    double total = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double t = std::abs((j + 0.5 - center) / support);
      const double v = std::max(0.0, 1.0 - t);
      w.push_back(v);
      total += v;
    }
    if (total <= 0.0) {
      // Upsampling sample centred past the last input pixel: clamp to the edge.
      const int j = std::clamp(static_cast<int>(center), 0, in - 1);
      f.first[i] = j;
      f.taps[i] = {1.0};
      continue;
    }
    for (double& v : w) v /= total;
    f.first[i] = lo;
    f.taps[i] = std::move(w);
  }
  return f;
}

}  // namespace

WeightMap ResampleWeightMap(const WeightMap& map, int width, int height) {
  if (width <= 0 || height <= 0) Fail(ErrorKind::kShape, "resample target must be non-empty");
  if (map.width == width && map.height == height) return map;
  const AxisFilter fx = MakeTriangleFilter(map.width, width);
  const AxisFilter fy = MakeTriangleFilter(map.height, height);

  std::vector<double> tmp(static_cast<size_t>(map.height) * width, 0.0);
  for (int y = 0; y < map.height; ++y) {
    const double* src = map.w.data() + static_cast<size_t>(y) * map.width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      const auto& taps = fx.taps[x];
      for (size_t k = 0; k < taps.size(); ++k) acc += taps[k] * src[fx.first[x] + k];
      tmp[static_cast<size_t>(y) * width + x] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(height) * width, 0.0);
  for (int y = 0; y < height; ++y) {
    const auto& taps = fy.taps[y];
    for (size_t k = 0; k < taps.size(); ++k) {
      const double* src = tmp.data() + static_cast<size_t>(fy.first[y] + k) * width;
      double* dst = out.data() + static_cast<size_t>(y) * width;
      for (int x = 0; x < width; ++x) dst[x] += taps[k] * src[x];
    }
  }
  WeightMap r = WeightMap::FromMass(width, height, std::move(out), 1e-300);
  r.uniform_fallback = map.uniform_fallback;
  return r;
}

}  // namespace flowqa
