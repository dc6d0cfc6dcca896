#include "flowqa/eval.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "flowqa/error.hpp"
#include "flowqa/parallel.hpp"

namespace flowqa {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (;;) {
    const size_t comma = line.find(',', start);
    out.push_back(Trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::optional<double> ParseReal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::filesystem::path DatasetManifest::Resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

DatasetManifest ParseManifest(std::string_view text, const std::filesystem::path& base_dir) {
  const auto lines = SplitLines(text);
  size_t header_line = 0;
  while (header_line < lines.size() && Trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) Fail(ErrorKind::kFormat, "manifest: missing header row");

  const auto header = SplitFields(lines[header_line]);
  auto column = [&](std::string_view name) -> std::optional<size_t> {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto ref_col = column("ref"), dis_col = column("dis"), dmos_col = column("dmos"), tag_col = column("tag");
  for (const auto& [name, col] : {std::pair{"ref", ref_col}, std::pair{"dis", dis_col}, std::pair{"dmos", dmos_col}}) {
    if (!col) Fail(ErrorKind::kFormat, std::string("manifest: missing column '") + name + "' in header");
  }

  DatasetManifest manifest;
  manifest.base_dir = base_dir;
  manifest.has_tag = tag_col.has_value();
  for (size_t i = header_line + 1; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const auto fields = SplitFields(lines[i]);
    const size_t line_no = i + 1;
    const size_t needed = std::max({*ref_col, *dis_col, *dmos_col}) + 1;
    if (fields.size() < needed) {
      Fail(ErrorKind::kFormat, "manifest line " + std::to_string(line_no) + ": expected at least " +
                                   std::to_string(needed) + " fields, found " + std::to_string(fields.size()));
    }
    ManifestRow row;
    row.line = line_no;
    row.ref = std::string(fields[*ref_col]);
    row.dis = std::string(fields[*dis_col]);
    if (row.ref.empty() || row.dis.empty()) {
      Fail(ErrorKind::kFormat, "manifest line " + std::to_string(line_no) + ": empty path");
    }
    const auto dmos = ParseReal(fields[*dmos_col]);
    if (!dmos) {
      Fail(ErrorKind::kFormat, "manifest line " + std::to_string(line_no) + ": dmos '" +
                                   std::string(fields[*dmos_col]) + "' is not a finite number");
    }
    row.dmos = *dmos;
    if (tag_col && *tag_col < fields.size()) row.tag = std::string(fields[*tag_col]);
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

DatasetManifest LoadManifest(const std::filesystem::path& csv_path, bool check_paths) {
  const auto bytes = ReadFileBytes(csv_path);
  DatasetManifest manifest =
      ParseManifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), csv_path.parent_path());
  if (check_paths) {
    for (const auto& row : manifest.rows) {
      for (const auto& p : {row.ref, row.dis}) {
        if (!std::filesystem::exists(manifest.Resolve(p))) {
          Fail(ErrorKind::kIo, "manifest line " + std::to_string(row.line) + ": '" + manifest.Resolve(p).string() +
                                   "' does not exist");
        }
      }
    }
  }
  return manifest;
}

std::string SerializeManifest(const DatasetManifest& manifest) {
  std::string out = manifest.has_tag ? "ref,dis,dmos,tag\n" : "ref,dis,dmos\n";
  for (const auto& row : manifest.rows) {
    out += row.ref + "," + row.dis + "," + FormatNumber(row.dmos);
    if (manifest.has_tag) out += "," + row.tag;
    out += "\n";
  }
  return out;
}

MetricId ParseMetric(std::string_view name, WeightingMode mode) {
  if (name == "psnr") return MetricId::kPsnr;
  if (name == "ssim") return MetricId::kSsim;
  if (name == "lpips") return MetricId::kLpips;
  if (name == "flolpips") return FlolpipsMetricFor(mode);
  Fail(ErrorKind::kUsage, "unknown metric '" + std::string(name) + "' (expected psnr, ssim, lpips or flolpips)");
}

WeightingMode ParseWeightingMode(std::string_view name) {
  if (name == "diff") return WeightingMode::kDiff;
  if (name == "ref") return WeightingMode::kRefOnly;
  if (name == "dis") return WeightingMode::kDisOnly;
  Fail(ErrorKind::kUsage, "unknown weighting mode '" + std::string(name) + "' (expected diff, ref or dis)");
}

bool MetricNeedsWeights(MetricId id) { return id != MetricId::kPsnr && id != MetricId::kSsim; }

bool MetricNeedsFlow(MetricId id) {
  return id == MetricId::kFlolpips || id == MetricId::kFlolpipsRefW || id == MetricId::kFlolpipsDisW;
}

MetricScore ScoreVideos(MetricId id, const VideoSequence& ref, const VideoSequence& dis, const ScoringContext& ctx) {
  if (MetricNeedsWeights(id) && ctx.archive == nullptr) {
    Fail(ErrorKind::kUsage, std::string(MetricName(id)) + " needs a weight archive");
  }
  if (MetricNeedsFlow(id) && ctx.flow == nullptr) {
    Fail(ErrorKind::kUsage, std::string(MetricName(id)) + " needs a flow provider");
  }
  switch (id) {
    case MetricId::kPsnr: return ScoreVideoPsnr(ref, dis, ctx.options);
    case MetricId::kSsim: return ScoreVideoSsim(ref, dis, ctx.options);
    case MetricId::kLpips: return ScoreVideoLpips(ref, dis, *ctx.archive, ctx.options);
    case MetricId::kFlolpips: return ScoreVideoFlolpips(ref, dis, *ctx.archive, *ctx.flow, WeightingMode::kDiff, ctx.options);
    case MetricId::kFlolpipsRefW:
      return ScoreVideoFlolpips(ref, dis, *ctx.archive, *ctx.flow, WeightingMode::kRefOnly, ctx.options);
    case MetricId::kFlolpipsDisW:
      return ScoreVideoFlolpips(ref, dis, *ctx.archive, *ctx.flow, WeightingMode::kDisOnly, ctx.options);
  }
  Fail(ErrorKind::kArgument, "unknown metric");
}

EvalReport EvaluateScores(std::vector<double> scores, std::vector<double> dmos, const LogisticFitOptions& fit_options) {
  EvalReport report;
  report.fit = FitLogistic(scores, dmos, fit_options);
  report.fitted.reserve(scores.size());
  report.residuals.reserve(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    report.fitted.push_back(report.fit.params(scores[i]));
    report.residuals.push_back(dmos[i] - report.fitted.back());
  }
  report.plcc = Plcc(report.fitted, dmos);
  report.srocc = Srocc(scores, dmos);
  report.rmse = Rmse(report.fitted, dmos);
  report.scores = std::move(scores);
  report.dmos = std::move(dmos);
  return report;
}

std::vector<double> ScoreManifest(const DatasetManifest& manifest, const ManifestScoring& scoring) {
  std::unique_ptr<FlowProvider> shared_flow;
  const bool per_row_flow = scoring.flow_spec.starts_with("flo-dir:");
  if (MetricNeedsFlow(scoring.metric) && !per_row_flow) shared_flow = MakeFlowProvider(scoring.flow_spec, scoring.flow_params);

  std::vector<double> scores(manifest.rows.size());
  ParallelFor(manifest.rows.size(), scoring.workers, [&](size_t i) {
    const ManifestRow& row = manifest.rows[i];
    std::unique_ptr<FlowProvider> row_flow;
    if (MetricNeedsFlow(scoring.metric) && per_row_flow) {
      char sub[32];
      std::snprintf(sub, sizeof sub, "row_%03zu", i);
      const std::filesystem::path dir = std::filesystem::path(scoring.flow_spec.substr(8)) / sub;
      row_flow = MakeFlowProvider("flo-dir:" + dir.string());
    }
    try {
      const VideoSequence ref = OpenVideo(manifest.Resolve(row.ref), scoring.video);
      const VideoSequence dis = OpenVideo(manifest.Resolve(row.dis), scoring.video);
      ScoringContext ctx;
      ctx.archive = scoring.archive;
      ctx.flow = row_flow ? row_flow.get() : shared_flow.get();
      ctx.options.workers = 1;
      ctx.options.range = scoring.video.range;
      const MetricScore score = ScoreVideos(scoring.metric, ref, dis, ctx);
      // exact frame copies would otherwise swamp the mean with the sentinel
      scores[i] = scoring.metric == MetricId::kPsnr ? CappedMean(score, kPsnrCeilingDb) : score.video_score;
    } catch (const Error& e) {
      throw Error(e.kind(), "manifest line " + std::to_string(row.line) + ": " + e.what());
    }
  });
  return scores;
}

EvalReport EvaluateManifest(const DatasetManifest& manifest, const ManifestScoring& scoring,
                            const LogisticFitOptions& fit_options) {
  std::vector<double> scores = ScoreManifest(manifest, scoring);
  std::vector<double> dmos;
  for (const auto& row : manifest.rows) dmos.push_back(row.dmos);
  return EvaluateScores(std::move(scores), std::move(dmos), fit_options);
}

std::string FormatNumber(double value) {
  if (value == kInfinitePsnr) return "inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) Fail(ErrorKind::kComputation, "number formatting failed");
  return std::string(buf, ptr);
}

std::string FormatEvalReportCsv(const EvalReport& report, const DatasetManifest& manifest) {
  std::string out = "row,ref,dis,tag,dmos,score,fitted,residual\n";
  for (size_t i = 0; i < report.scores.size(); ++i) {
    const ManifestRow* row = i < manifest.rows.size() ? &manifest.rows[i] : nullptr;
    out += std::to_string(i) + "," + (row ? row->ref : "") + "," + (row ? row->dis : "") + "," +
           (row ? row->tag : "") + "," + FormatNumber(report.dmos[i]) + "," + FormatNumber(report.scores[i]) + "," +
           FormatNumber(report.fitted[i]) + "," + FormatNumber(report.residuals[i]) + "\n";
  }
  return out;
}

std::string FormatEvalSummary(const EvalReport& report, MetricId metric) {
  std::string out;
  out += "metric    " + std::string(MetricName(metric)) + "\n";
  out += "rows      " + std::to_string(report.scores.size()) + "\n";
  out += "plcc      " + FormatNumber(report.plcc) + "\n";
  out += "srocc     " + FormatNumber(report.srocc) + "\n";
  out += "rmse      " + FormatNumber(report.rmse) + "\n";
  const auto& p = report.fit.params;
  out += "logistic  b1=" + FormatNumber(p.b1) + " b2=" + FormatNumber(p.b2) + " b3=" + FormatNumber(p.b3) +
         " b4=" + FormatNumber(p.b4) + "\n";
  out += "fit       sse=" + FormatNumber(report.fit.sse) + " converged=" + (report.fit.converged ? "yes" : "no") +
         " restarts=" + std::to_string(report.fit.restarts) + "\n";
  return out;
}

std::vector<double> ReadResiduals(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  const auto lines = SplitLines(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  std::vector<double> out;
  std::optional<size_t> column;
  bool first = true;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (Trim(lines[i]).empty()) continue;
    const auto fields = SplitFields(lines[i]);
    if (first) {
      first = false;
      for (size_t c = 0; c < fields.size(); ++c)
        if (fields[c] == "residual") column = c;
      if (column) continue;
      if (!ParseReal(fields[0])) {
        Fail(ErrorKind::kFormat, path.string() + ": header has no 'residual' column");
      }
      column = 0;
    }
    if (*column >= fields.size()) {
      Fail(ErrorKind::kFormat, path.string() + " line " + std::to_string(i + 1) + ": missing residual field");
    }
    const auto v = ParseReal(fields[*column]);
    if (!v) {
      Fail(ErrorKind::kFormat, path.string() + " line " + std::to_string(i + 1) + ": '" +
                                   std::string(fields[*column]) + "' is not a finite number");
    }
    out.push_back(*v);
  }
  return out;
}

}  // namespace flowqa
