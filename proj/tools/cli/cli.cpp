#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>

#include "flowqa/error.hpp"
#include "flowqa/eval.hpp"
#include "flowqa/flow.hpp"
#include "flowqa/media_io.hpp"
#include "flowqa/metrics.hpp"
#include "flowqa/nn.hpp"
#include "flowqa/stats.hpp"
#include "flowqa/vfi.hpp"

#ifndef FLOWQA_DEFAULT_WEIGHTS
#define FLOWQA_DEFAULT_WEIGHTS "data/weights.flpw"
#endif

namespace flowqa::cli {

namespace {

namespace fs = std::filesystem;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kIo:
    case ErrorKind::kFormat:
    case ErrorKind::kTruncated:
    case ErrorKind::kUnsupported: return kExitIo;
    case ErrorKind::kShape:
    case ErrorKind::kArgument:
    case ErrorKind::kDegenerate:
    case ErrorKind::kComputation: return kExitComputation;
  }
  return kExitComputation;
}

struct VideoFlags {
  int width = 0;
  int height = 0;
  std::string fps = "30";
  std::string range = "limited";

  void Attach(CLI::App* app) {
    app->add_option("--width", width, "Frame width (raw .yuv input)");
    app->add_option("--height", height, "Frame height (raw .yuv input)");
    app->add_option("--fps", fps, "Frame rate as N or N/D (raw .yuv and image directories)")->capture_default_str();
    app->add_option("--range", range, "YUV quantization range")
        ->check(CLI::IsMember({"limited", "full"}))
        ->capture_default_str();
  }

  VideoOptions Options() const {
    VideoOptions o;
    o.width = width;
    o.height = height;
    o.range = range == "full" ? ColorRange::kFull : ColorRange::kLimited;
    const auto slash = fps.find('/');
    const std::string num = fps.substr(0, slash);
    const std::string den = slash == std::string::npos ? "1" : fps.substr(slash + 1);
    auto parse = [&](const std::string& s) {
      int64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || v <= 0) Fail(ErrorKind::kUsage, "bad --fps '" + fps + "'");
      return v;
    };
    o.fps = {parse(num), parse(den)};
    return o;
  }
};

struct MetricFlags {
  std::string metric;
  std::string mode = "diff";
  std::string flow = "builtin";
  std::string weights;
  int workers = 0;

  void Attach(CLI::App* app) {
    app->add_option("--metric", metric, "Metric")
        ->required()
        ->check(CLI::IsMember({"psnr", "ssim", "lpips", "flolpips"}));
    app->add_option("--mode", mode, "Flow weighting for flolpips")
        ->check(CLI::IsMember({"diff", "ref", "dis"}))
        ->capture_default_str();
    app->add_option("--flow", flow, "Flow source: builtin or flo-dir:<path>")->capture_default_str();
    app->add_option("--weights", weights, "Weight archive (default: $FLOWQA_WEIGHTS, then " FLOWQA_DEFAULT_WEIGHTS ")")
        ->envname("FLOWQA_WEIGHTS");
    app->add_option("--workers", workers, "Worker threads, 0 = one per core")->capture_default_str();
  }

  MetricId Metric() const { return ParseMetric(metric, ParseWeightingMode(mode)); }

  fs::path WeightsPath() const { return weights.empty() ? fs::path(FLOWQA_DEFAULT_WEIGHTS) : fs::path(weights); }
};

void RequireFile(const fs::path& path, const char* what) {
  if (!fs::exists(path)) Fail(ErrorKind::kIo, std::string(what) + " '" + path.string() + "' does not exist");
}

void WriteText(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  WriteFileBytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string FormatScoreCsv(const MetricScore& score) {
  std::string csv = "frame_index,score\n";
  for (const auto& [index, value] : score.per_frame) csv += std::to_string(index) + "," + FormatNumber(value) + "\n";
  csv += "summary," + FormatNumber(score.video_score) + "\n";
  return csv;
}

int RunScore(const fs::path& ref_path, const fs::path& dis_path, const MetricFlags& mf, const VideoFlags& vf,
             const std::string& out_path, std::ostream& out) {
  const MetricId metric = mf.Metric();
  RequireFile(ref_path, "reference");
  RequireFile(dis_path, "distorted");
  std::unique_ptr<WeightArchive> archive;
  if (MetricNeedsWeights(metric)) {
    RequireFile(mf.WeightsPath(), "weight archive");
    archive = std::make_unique<WeightArchive>(LoadWeightArchive(mf.WeightsPath()));
  }
  std::unique_ptr<FlowProvider> flow;
  if (MetricNeedsFlow(metric)) flow = MakeFlowProvider(mf.flow);

  const VideoOptions vo = vf.Options();
  const VideoSequence ref = OpenVideo(ref_path, vo);
  const VideoSequence dis = OpenVideo(dis_path, vo);
  ScoringContext ctx;
  ctx.archive = archive.get();
  ctx.flow = flow.get();
  ctx.options.workers = mf.workers;
  ctx.options.range = vo.range;
  const MetricScore score = ScoreVideos(metric, ref, dis, ctx);
  WriteText(FormatScoreCsv(score), out_path, out);
  if (!out_path.empty() && out_path != "-") out << MetricName(metric) << " " << FormatNumber(score.video_score) << "\n";
  return kExitOk;
}

int RunSynthesize(const fs::path& in, const std::string& method, int factor, const fs::path& out_path,
                  const VideoFlags& vf) {
  RequireFile(in, "input");
  const VideoSequence seq = OpenVideo(in, vf.Options());
  const VideoSequence up = method == "repeat" ? FrameRepeatUpsample(seq, factor) : FrameAverageUpsample(seq, factor);
  WriteVideo(up, out_path);
  return kExitOk;
}

int RunEvaluate(const fs::path& manifest_path, const MetricFlags& mf, const VideoFlags& vf, bool check_paths,
                const std::string& out_path, std::ostream& out) {
  ManifestScoring scoring;
  scoring.metric = mf.Metric();
  RequireFile(manifest_path, "manifest");
  const DatasetManifest manifest = LoadManifest(manifest_path, check_paths);
  std::unique_ptr<WeightArchive> archive;
  if (MetricNeedsWeights(scoring.metric)) {
    RequireFile(mf.WeightsPath(), "weight archive");
    archive = std::make_unique<WeightArchive>(LoadWeightArchive(mf.WeightsPath()));
  }
  if (MetricNeedsFlow(scoring.metric)) MakeFlowProvider(mf.flow);  // reject a bad spec before scoring
  scoring.flow_spec = mf.flow;
  scoring.archive = archive.get();
  scoring.video = vf.Options();
  scoring.workers = mf.workers;
  const EvalReport report = EvaluateManifest(manifest, scoring);
  WriteText(FormatEvalReportCsv(report, manifest), out_path, out);
  out << FormatEvalSummary(report, scoring.metric);
  return kExitOk;
}

int RunFTest(const fs::path& a, const fs::path& b, double alpha, std::ostream& out) {
  RequireFile(a, "residuals");
  RequireFile(b, "residuals");
  const auto ra = ReadResiduals(a);
  const auto rb = ReadResiduals(b);
  out << FTest(ra, rb, alpha) << "\n";
  return kExitOk;
}

int RunFlow(const fs::path& prev, const fs::path& next, const fs::path& out_path) {
  RequireFile(prev, "previous frame");
  RequireFile(next, "next frame");
  WriteFlo(EstimateFlow(ReadImage(prev), ReadImage(next)), out_path);
  return kExitOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Full-reference video quality metrics with flow-weighted LPIPS pooling", "flowqa"};
  app.require_subcommand(1, 1);

  VideoFlags video;
  MetricFlags metric;
  std::string out_path;

  auto* score = app.add_subcommand("score", "Score a distorted video against its reference");
  std::string ref_path, dis_path;
  score->add_option("--ref", ref_path, "Reference video")->required();
  score->add_option("--dis", dis_path, "Distorted video")->required();
  score->add_option("--out", out_path, "Per-frame CSV (default: stdout)");
  metric.Attach(score);
  video.Attach(score);

  auto* synth = app.add_subcommand("synthesize", "Raise the frame rate by frame repetition or averaging");
  std::string in_path, method;
  int factor = 2;
  synth->add_option("--in", in_path, "Input video")->required();
  synth->add_option("--method", method, "Interpolation method")->required()->check(CLI::IsMember({"repeat", "average"}));
  synth->add_option("--factor", factor, "Rate multiplier")->capture_default_str();
  synth->add_option("--out", out_path, "Output .y4m, .yuv or directory")->required();
  video.Attach(synth);

  auto* evaluate = app.add_subcommand("evaluate", "Score every manifest row and correlate with DMOS");
  std::string manifest_path;
  bool check_paths = false;
  evaluate->add_option("--manifest", manifest_path, "CSV with columns ref,dis,dmos[,tag]")->required();
  evaluate->add_option("--out", out_path, "Per-row report CSV")->required();
  evaluate->add_flag("--check-paths", check_paths, "Verify every manifest path before scoring");
  metric.Attach(evaluate);
  video.Attach(evaluate);

  auto* ftest = app.add_subcommand("ftest", "Variance-ratio test on two residual lists");
  std::string res_a, res_b;
  double alpha = 0.05;
  ftest->add_option("--residuals-a", res_a, "Report CSV or list of residuals")->required();
  ftest->add_option("--residuals-b", res_b, "Report CSV or list of residuals")->required();
  ftest->add_option("--alpha", alpha, "Significance level")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  auto* flow = app.add_subcommand("flow", "Estimate optical flow between two images");
  std::string prev_path, next_path;
  flow->add_option("--prev", prev_path, "First image")->required();
  flow->add_option("--next", next_path, "Second image")->required();
  flow->add_option("--out", out_path, "Output .flo")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty() && argc > 1 && argv[1][0] != '-') {
      err << "flowqa: unknown subcommand '" << argv[1] << "'\n";
    } else {
      err << "flowqa: " << e.what() << "\n";
    }
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitUsage;
  }

  try {
    if (score->parsed()) return RunScore(ref_path, dis_path, metric, video, out_path, out);
    if (synth->parsed()) return RunSynthesize(in_path, method, factor, out_path, video);
    if (evaluate->parsed()) return RunEvaluate(manifest_path, metric, video, check_paths, out_path, out);
    if (ftest->parsed()) return RunFTest(res_a, res_b, alpha, out);
    if (flow->parsed()) return RunFlow(prev_path, next_path, out_path);
  } catch (const Error& e) {
    err << "flowqa: " << ErrorKindName(e.kind()) << " error: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "flowqa: io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "flowqa: computation error: " << e.what() << "\n";
    return kExitComputation;
  }
  err << "flowqa: no subcommand\n" << app.help();
  return kExitUsage;
}

}  // namespace flowqa::cli
