#include "flowqa/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "flowqa/error.hpp"
#include "flowqa/media_io.hpp"
#include "flowqa/parallel.hpp"

namespace flowqa {

const char* MetricName(MetricId id) {
  switch (id) {
    case MetricId::kPsnr: return "psnr";
    case MetricId::kSsim: return "ssim";
    case MetricId::kLpips: return "lpips";
    case MetricId::kFlolpips: return "flolpips";
    case MetricId::kFlolpipsRefW: return "flolpips-refw";
    case MetricId::kFlolpipsDisW: return "flolpips-disw";
  }
  return "unknown";
}

MetricId FlolpipsMetricFor(WeightingMode mode) {
  switch (mode) {
    case WeightingMode::kDiff: return MetricId::kFlolpips;
    case WeightingMode::kRefOnly: return MetricId::kFlolpipsRefW;
    case WeightingMode::kDisOnly: return MetricId::kFlolpipsDisW;
  }
  return MetricId::kFlolpips;
}

void MetricScore::Finalize() {
  if (per_frame.empty()) Fail(ErrorKind::kArgument, "metric score has no frames");
  bool any_infinite = false;
  double sum = 0.0;
  for (const auto& [index, value] : per_frame) {
    any_infinite = any_infinite || value == kInfinitePsnr;
    sum += value;
  }
  video_score = any_infinite ? kInfinitePsnr : sum / static_cast<double>(per_frame.size());
}

double CappedMean(const MetricScore& score, double ceiling) {
  if (score.per_frame.empty()) Fail(ErrorKind::kArgument, "metric score has no frames");
  double sum = 0.0;
  for (const auto& [index, value] : score.per_frame) sum += std::min(value, ceiling);
  return sum / static_cast<double>(score.per_frame.size());
}

namespace {

void CheckSameSize(const Plane& a, const Plane& b, const char* what) {
  if (a.width != b.width || a.height != b.height) {
    Fail(ErrorKind::kShape, std::string(what) + ": frames differ in size (" + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
  }
}

void CheckSequences(const VideoSequence& ref, const VideoSequence& dis, size_t min_frames, const char* what) {
  ref.Validate();
  dis.Validate();
  if (ref.size() != dis.size()) {
    Fail(ErrorKind::kShape, std::string(what) + ": reference has " + std::to_string(ref.size()) +
                                " frames, distorted has " + std::to_string(dis.size()));
  }
  if (ref.width() != dis.width() || ref.height() != dis.height()) {
    Fail(ErrorKind::kShape, std::string(what) + ": reference and distorted dimensions differ");
  }
  if (ref.size() < min_frames) {
    Fail(ErrorKind::kDegenerate, std::string(what) + ": needs at least " + std::to_string(min_frames) +
                                     " frames, got " + std::to_string(ref.size()));
  }
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kSsimC2 = (0.03 * 255) * (0.03 * 255);

std::vector<double> GaussianKernel() {
  std::vector<double> k(kSsimWindow);
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    k[i] = std::exp(-x * x / (2 * kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-region separable filtering of a full-resolution field.
std::vector<double> FilterValid(const std::vector<double>& src, int w, int h, const std::vector<double>& k) {
  const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * src[static_cast<size_t>(y) * w + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * tmp[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = acc;
    }
  return out;
}

template <typename PerFrame>
MetricScore ScoreFrames(MetricId id, const VideoSequence& ref, const VideoSequence& dis, const ScoreOptions& options,
                        PerFrame&& per_frame) {
  CheckSequences(ref, dis, 1, MetricName(id));
  std::vector<double> values(ref.size());
  ParallelFor(ref.size(), options.workers, [&](size_t i) { values[i] = per_frame(ref.frames[i], dis.frames[i]); });
  MetricScore score;
  score.metric = id;
  for (size_t i = 0; i < values.size(); ++i) score.per_frame.emplace_back(i, values[i]);
  score.Finalize();
  return score;
}

}  // namespace

double PsnrPlane(const Plane& ref, const Plane& dis) {
  CheckSameSize(ref, dis, "psnr");
  double se = 0.0;
  for (size_t i = 0; i < ref.data.size(); ++i) {
    const double d = static_cast<double>(ref.data[i]) - dis.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(ref.data.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double Psnr(const Frame& ref, const Frame& dis) { return PsnrPlane(LumaCodeValues(ref), LumaCodeValues(dis)); }

double SsimPlane(const Plane& ref, const Plane& dis) {
  CheckSameSize(ref, dis, "ssim");
  const int w = ref.width, h = ref.height;
  if (w < kSsimWindow || h < kSsimWindow) {
    Fail(ErrorKind::kShape, "ssim: frame " + std::to_string(w) + "x" + std::to_string(h) + " is smaller than the " +
                                std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
  }
  const size_t n = ref.data.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (size_t i = 0; i < n; ++i) {
    x[i] = ref.data[i];
    y[i] = dis.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto k = GaussianKernel();
  const auto mx = FilterValid(x, w, h, k);
  const auto my = FilterValid(y, w, h, k);
  const auto sxx = FilterValid(xx, w, h, k);
  const auto syy = FilterValid(yy, w, h, k);
  const auto sxy = FilterValid(xy, w, h, k);
  double total = 0.0;
  for (size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cxy = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + kSsimC1) * (2 * cxy + kSsimC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2));
  }
  return total / static_cast<double>(mx.size());
}

double Ssim(const Frame& ref, const Frame& dis) { return SsimPlane(LumaCodeValues(ref), LumaCodeValues(dis)); }

MetricScore ScoreVideoPsnr(const VideoSequence& ref, const VideoSequence& dis, const ScoreOptions& options) {
  return ScoreFrames(MetricId::kPsnr, ref, dis, options, [](const Frame& a, const Frame& b) { return Psnr(a, b); });
}

MetricScore ScoreVideoSsim(const VideoSequence& ref, const VideoSequence& dis, const ScoreOptions& options) {
  return ScoreFrames(MetricId::kSsim, ref, dis, options, [](const Frame& a, const Frame& b) { return Ssim(a, b); });
}

MetricScore ScoreVideoLpips(const VideoSequence& ref, const VideoSequence& dis, const WeightArchive& archive,
                            const ScoreOptions& options) {
  const auto weights = LpipsLinearWeights::FromArchive(archive);
  return ScoreFrames(MetricId::kLpips, ref, dis, options, [&](const Frame& a, const Frame& b) {
    return LpipsPair(ExtractFeatures(AsRgb(a, options.range), archive),
                     ExtractFeatures(AsRgb(b, options.range), archive), weights);
  });
}

WeightMap WindowWeightMap(const FlowField& ref_flow, const FlowField& dis_flow, WeightingMode mode) {
  switch (mode) {
    case WeightingMode::kDiff: return FlowDiffWeight(ref_flow, dis_flow);
    case WeightingMode::kRefOnly: return FlowMagnitudeWeight(ref_flow);
    case WeightingMode::kDisOnly: return FlowMagnitudeWeight(dis_flow);
  }
  Fail(ErrorKind::kArgument, "unknown weighting mode");
}

MetricScore ScoreVideoFlolpips(const VideoSequence& ref, const VideoSequence& dis, const WeightArchive& archive,
                               const FlowProvider& flow, WeightingMode mode, const ScoreOptions& options) {
  CheckSequences(ref, dis, 2, "flolpips");
  const auto weights = LpipsLinearWeights::FromArchive(archive);
  const size_t windows = ref.size() - 1;
  std::vector<double> values(windows);
  ParallelFor(windows, options.workers, [&](size_t k) {
    const size_t t = k + 1;
    const FlowField f_ref = flow.Flow(FlowSide::kReference, t, ref.frames[t - 1], ref.frames[t]);
    const FlowField f_dis = flow.Flow(FlowSide::kDistorted, t, dis.frames[t - 1], dis.frames[t]);
    const WeightMap map = WindowWeightMap(f_ref, f_dis, mode);
    values[k] = WeightedLpipsPair(ExtractFeatures(AsRgb(ref.frames[t], options.range), archive),
                                  ExtractFeatures(AsRgb(dis.frames[t], options.range), archive), weights, map);
  });
  MetricScore score;
  score.metric = FlolpipsMetricFor(mode);
  for (size_t k = 0; k < windows; ++k) score.per_frame.emplace_back(k + 1, values[k]);
  score.Finalize();
  return score;
}

}  // namespace flowqa
