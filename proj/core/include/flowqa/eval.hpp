#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowqa/media_io.hpp"
#include "flowqa/metrics.hpp"
#include "flowqa/stats.hpp"

namespace flowqa {

struct ManifestRow {
  std::string ref;
  std::string dis;
  double dmos = 0.0;
  std::string tag;
  size_t line = 0;  // 1-based line in the source file
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  bool has_tag = false;
  // Relative paths in rows resolve against this directory.
  std::filesystem::path base_dir;

  std::filesystem::path Resolve(const std::string& path) const;
};

// Header `ref,dis,dmos[,tag]` (any column order, extra columns ignored). Blank lines are skipped.
DatasetManifest ParseManifest(std::string_view text, const std::filesystem::path& base_dir = {});
DatasetManifest LoadManifest(const std::filesystem::path& csv_path, bool check_paths = false);
std::string SerializeManifest(const DatasetManifest& manifest);

// Metric name as given on the command line ("psnr", "ssim", "lpips", "flolpips") plus the
// weighting mode for flolpips.
MetricId ParseMetric(std::string_view name, WeightingMode mode = WeightingMode::kDiff);
WeightingMode ParseWeightingMode(std::string_view name);
bool MetricNeedsWeights(MetricId id);
bool MetricNeedsFlow(MetricId id);

struct ScoringContext {
  const WeightArchive* archive = nullptr;
  const FlowProvider* flow = nullptr;
  ScoreOptions options;
};

MetricScore ScoreVideos(MetricId id, const VideoSequence& ref, const VideoSequence& dis, const ScoringContext& ctx);

struct EvalReport {
  double plcc = 0.0;
  double srocc = 0.0;
  double rmse = 0.0;
  LogisticFit fit;
  std::vector<double> scores;
  std::vector<double> dmos;
  std::vector<double> fitted;
  std::vector<double> residuals;  // dmos - Y(score)
};

// Fits the logistic map and computes PLCC/RMSE on fitted values, SROCC on raw scores.
EvalReport EvaluateScores(std::vector<double> scores, std::vector<double> dmos,
                          const LogisticFitOptions& fit_options = {});

struct ManifestScoring {
  MetricId metric = MetricId::kFlolpips;
  std::string flow_spec = "builtin";  // flo-dir:<dir> reads <dir>/row_%03zu/ per row
  FlowParams flow_params;
  const WeightArchive* archive = nullptr;
  VideoOptions video;
  int workers = 1;
};

// Video score of every row, in manifest order. Rows run in parallel; each row is scored serially.
// PSNR rows use the capped per-frame mean (kPsnrCeilingDb).
std::vector<double> ScoreManifest(const DatasetManifest& manifest, const ManifestScoring& scoring);

EvalReport EvaluateManifest(const DatasetManifest& manifest, const ManifestScoring& scoring,
                            const LogisticFitOptions& fit_options = {});

// Per-row CSV: row,ref,dis,tag,dmos,score,fitted,residual
std::string FormatEvalReportCsv(const EvalReport& report, const DatasetManifest& manifest);
// Human-readable block with the fitted parameters and the three correlation figures.
std::string FormatEvalSummary(const EvalReport& report, MetricId metric);

// Reads the `residual` column of a report CSV, or the first column of a headerless list.
std::vector<double> ReadResiduals(const std::filesystem::path& path);

// Shortest round-trip decimal text, "inf" for kInfinitePsnr.
std::string FormatNumber(double value);

}  // namespace flowqa
