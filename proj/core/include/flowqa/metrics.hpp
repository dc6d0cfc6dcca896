#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "flowqa/flow.hpp"
#include "flowqa/frame.hpp"
#include "flowqa/lpips.hpp"
#include "flowqa/nn.hpp"

namespace flowqa {

enum class MetricId { kPsnr, kSsim, kLpips, kFlolpips, kFlolpipsRefW, kFlolpipsDisW };

// Pooling weights for the flow-weighted LPIPS variants.
enum class WeightingMode {
  kDiff,     // |F_ref - F_dis|
  kRefOnly,  // |F_ref|
  kDisOnly,  // |F_dis|
};

const char* MetricName(MetricId id);
MetricId FlolpipsMetricFor(WeightingMode mode);

// Returned by Psnr for identical inputs; serialized as "inf".
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::max();

struct MetricScore {
  MetricId metric = MetricId::kPsnr;
  double video_score = 0.0;
  std::vector<std::pair<size_t, double>> per_frame;

  // Sets video_score to the mean of per_frame; one infinite frame makes the mean kInfinitePsnr.
  void Finalize();
};

// Per-frame PSNR ceiling for scores that feed a correlation analysis (8-bit: 6 * 8 + 12 dB).
inline constexpr double kPsnrCeilingDb = 60.0;

// Mean of per_frame with every value clamped to `ceiling`.
double CappedMean(const MetricScore& score, double ceiling);

// PSNR of BT.709 luma code values, peak 255.
double Psnr(const Frame& ref, const Frame& dis);
double PsnrPlane(const Plane& ref, const Plane& dis);

// Single-scale SSIM on luma: 11x11 Gaussian (sigma 1.5), K1 0.01, K2 0.03, L 255, mean over the
// valid (unpadded) map.
double Ssim(const Frame& ref, const Frame& dis);
double SsimPlane(const Plane& ref, const Plane& dis);

struct ScoreOptions {
  int workers = 1;
  ColorRange range = ColorRange::kLimited;
};

MetricScore ScoreVideoPsnr(const VideoSequence& ref, const VideoSequence& dis, const ScoreOptions& options = {});
MetricScore ScoreVideoSsim(const VideoSequence& ref, const VideoSequence& dis, const ScoreOptions& options = {});

// Plain LPIPS on every frame; video score is the mean over all N frames.
MetricScore ScoreVideoLpips(const VideoSequence& ref, const VideoSequence& dis, const WeightArchive& archive,
                            const ScoreOptions& options = {});

// Flow-weighted LPIPS over the N-1 sliding windows (t-1, t), features from frame t.
MetricScore ScoreVideoFlolpips(const VideoSequence& ref, const VideoSequence& dis, const WeightArchive& archive,
                               const FlowProvider& flow, WeightingMode mode = WeightingMode::kDiff,
                               const ScoreOptions& options = {});

// Pooling map for one window under `mode`.
WeightMap WindowWeightMap(const FlowField& ref_flow, const FlowField& dis_flow, WeightingMode mode);

}  // namespace flowqa
