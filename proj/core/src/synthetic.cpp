#include "flowqa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowqa/error.hpp"
#include "flowqa/media_io.hpp"
#include "flowqa/vfi.hpp"

namespace flowqa {

namespace {

double Smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Pads (holding the last frame) or truncates to `length` frames.
VideoSequence HoldToLength(VideoSequence seq, size_t length) {
  while (seq.size() < length) seq.frames.push_back(seq.frames.back());
  seq.frames.resize(length);
  return seq;
}

}  // namespace

Plane ValueNoise(int width, int height, uint32_t seed, int base_cell, int octaves) {
  if (width <= 0 || height <= 0 || base_cell < 1 || octaves < 1) {
    Fail(ErrorKind::kArgument, "value noise: bad size or octave settings");
  }
  std::mt19937 rng(seed);
  std::vector<double> acc(static_cast<size_t>(width) * height, 0.0);
  double amplitude = 1.0, total = 0.0;
  int cell = base_cell;
  for (int o = 0; o < octaves && cell >= 1; ++o) {
    const int gw = width / cell + 2, gh = height / cell + 2;
    std::vector<double> lattice(static_cast<size_t>(gw) * gh);
    for (double& v : lattice) v = static_cast<double>(rng()) / 4294967295.0;
    for (int y = 0; y < height; ++y) {
      const int gy = y / cell;
      const double fy = Smooth(static_cast<double>(y % cell) / cell);
      for (int x = 0; x < width; ++x) {
        const int gx = x / cell;
        const double fx = Smooth(static_cast<double>(x % cell) / cell);
        auto g = [&](int i, int j) { return lattice[static_cast<size_t>(j) * gw + i]; };
        const double top = g(gx, gy) + fx * (g(gx + 1, gy) - g(gx, gy));
        const double bottom = g(gx, gy + 1) + fx * (g(gx + 1, gy + 1) - g(gx, gy + 1));
        acc[static_cast<size_t>(y) * width + x] += amplitude * (top + fy * (bottom - top));
      }
    }
    total += amplitude;
    amplitude *= 0.7;
    cell /= 2;
  }
  Plane out(width, height);
  for (size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i] / total);
  return out;
}

Frame TextureCanvas::Window(int x0, int y0, int w, int h) const {
  if (x0 < 0 || y0 < 0 || x0 + w > width() || y0 + h > height()) {
    Fail(ErrorKind::kArgument, "texture window (" + std::to_string(x0) + "," + std::to_string(y0) + ") " +
                                   std::to_string(w) + "x" + std::to_string(h) + " leaves the canvas");
  }
  std::vector<Plane> planes;
  for (const Plane* src : {&r, &g, &b}) {
    Plane p(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) p.at(x, y) = src->at(x0 + x, y0 + y);
    planes.push_back(std::move(p));
  }
  return Frame(ColorSpace::kRgbFloat, std::move(planes));
}

TextureCanvas MakeTextureCanvas(int width, int height, uint32_t seed) {
  const Plane luma = ValueNoise(width, height, seed, 16, 4);
  TextureCanvas canvas;
  Plane* channels[3] = {&canvas.r, &canvas.g, &canvas.b};
  for (int c = 0; c < 3; ++c) {
    const Plane tint = ValueNoise(width, height, seed * 31u + 101u * (c + 1), 32, 2);
    *channels[c] = Plane(width, height);
    for (size_t i = 0; i < luma.data.size(); ++i) {
      // stretch contrast around mid-grey, then mix in a slow per-channel tint
      const double l = std::clamp(0.5 + 1.8 * (luma.data[i] - 0.5), 0.0, 1.0);
      channels[c]->data[i] = static_cast<float>(0.75 * l + 0.25 * tint.data[i]);
    }
  }
  return canvas;
}

VideoSequence PanningClip(const TextureCanvas& canvas, int width, int height, int frames, int vx, int vy, int x0,
                          int y0) {
  VideoSequence seq;
  for (int t = 0; t < frames; ++t) seq.frames.push_back(canvas.Window(x0 - t * vx, y0 - t * vy, width, height));
  return seq;
}

const std::vector<SyntheticCondition>& SyntheticConditions() {
  static const std::vector<SyntheticCondition> kConditions = {{"avg2", 1.0}, {"rep2", 1.6}, {"rep3", 2.5}};
  return kConditions;
}

DatasetManifest WriteSyntheticManifest(const std::filesystem::path& dir, const SyntheticManifestOptions& options) {
  if (options.frames < 6) Fail(ErrorKind::kArgument, "synthetic manifest needs at least 6 frames per clip");
  std::filesystem::create_directories(dir);
  const int max_speed = *std::max_element(options.speeds.begin(), options.speeds.end());
  const int travel = max_speed * options.frames + 1;
  const TextureCanvas canvas =
      MakeTextureCanvas(options.width + travel, options.height + travel, options.seed);

  DatasetManifest manifest;
  manifest.base_dir = dir;
  manifest.has_tag = true;
  for (int v : options.speeds) {
    const VideoSequence rgb = PanningClip(canvas, options.width, options.height, options.frames, v, v / 2,
                                          travel - 1, travel - 1);
    VideoSequence ref;
    ref.frame_rate = {30, 1};
    for (const Frame& f : rgb.frames) ref.frames.push_back(FromRgb(f));
    // quantize the way a decoder would see it before deriving the distortions
    ref = ParseY4m(SerializeY4m(ref));

    const std::string ref_name = "ref_s" + std::to_string(v) + ".y4m";
    WriteY4m(ref, dir / ref_name);
    for (const auto& cond : SyntheticConditions()) {
      VideoSequence dis;
      if (cond.name == "avg2") dis = FrameAverageUpsample(TemporalSubsample(ref, 2), 2);
      else if (cond.name == "rep2") dis = FrameRepeatUpsample(TemporalSubsample(ref, 2), 2);
      else dis = FrameRepeatUpsample(TemporalSubsample(ref, 3), 3);
      dis = HoldToLength(std::move(dis), ref.size());
      dis.frame_rate = ref.frame_rate;
      const std::string dis_name = "dis_s" + std::to_string(v) + "_" + cond.name + ".y4m";
      WriteY4m(dis, dir / dis_name);
      ManifestRow row;
      row.ref = ref_name;
      row.dis = dis_name;
      row.dmos = 10.0 * v * cond.severity;
      row.tag = "s" + std::to_string(v) + "_" + cond.name;
      row.line = manifest.rows.size() + 2;
      manifest.rows.push_back(std::move(row));
    }
  }
  const std::string csv = SerializeManifest(manifest);
  WriteFileBytes(dir / "manifest.csv", std::span(reinterpret_cast<const uint8_t*>(csv.data()), csv.size()));
  return manifest;
}

}  // namespace flowqa
