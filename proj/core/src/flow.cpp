#include "flowqa/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "flowqa/error.hpp"
#include "flowqa/media_io.hpp"

namespace flowqa {
namespace fs = std::filesystem;

void FlowParams::Validate() const {
  if (levels < 1) Fail(ErrorKind::kArgument, "flow: levels must be >= 1");
  if (patch_size < 3 || patch_size % 2 == 0) Fail(ErrorKind::kArgument, "flow: patch size must be odd and >= 3");
  if (iterations < 0 || smoothing_sweeps < 0) Fail(ErrorKind::kArgument, "flow: negative iteration count");
  if (!(smoothing_weight > 0.0f)) Fail(ErrorKind::kArgument, "flow: smoothing weight must be positive");
}

namespace {

constexpr float kHessianFloor = 1e-3f;
constexpr int kJacobiIterations = 10;

float Sample(const Plane& img, float x, float y) {
  x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
  const int x0 = std::min(static_cast<int>(x), img.width - 1);
  const int y0 = std::min(static_cast<int>(y), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float ax = x - x0, ay = y - y0;
  const float top = img.at(x0, y0) + ax * (img.at(x1, y0) - img.at(x0, y0));
  const float bot = img.at(x0, y1) + ax * (img.at(x1, y1) - img.at(x0, y1));
  return top + ay * (bot - top);
}

// Binomial [1 4 6 4 1] blur with replicated borders, then 2:1 decimation.
Plane Downsample(const Plane& src) {
  static constexpr float k[5] = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
  const int w = src.width, h = src.height;
  Plane tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * src.at(std::clamp(x + i, 0, w - 1), y);
      tmp.at(x, y) = acc;
    }
  const int ow = (w + 1) / 2, oh = (h + 1) / 2;
  Plane out(ow, oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      float acc = 0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at(2 * x, std::clamp(2 * y + i, 0, h - 1));
      out.at(x, y) = acc;
    }
  return out;
}

void Gradients(const Plane& img, Plane& gx, Plane& gy) {
  const int w = img.width, h = img.height;
  gx = Plane(w, h);
  gy = Plane(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      gx.at(x, y) = (img.at(xr, y) - img.at(xl, y)) / static_cast<float>(std::max(xr - xl, 1));
      gy.at(x, y) = (img.at(x, yd) - img.at(x, yu)) / static_cast<float>(std::max(yd - yu, 1));
    }
}

// Patch origins along one axis: stride steps plus a final patch flush with the border.
std::vector<int> PatchOrigins(int extent, int patch, int stride) {
  std::vector<int> out;
  if (extent <= patch) return {0};
  for (int p = 0; p + patch <= extent; p += stride) out.push_back(p);
  if (out.back() + patch < extent) out.push_back(extent - patch);
  return out;
}

class LevelSolver {
 public:
  LevelSolver(const Plane& i0, const Plane& i1, const FlowParams& params) : i0_(i0), i1_(i1), params_(params) {
    Gradients(i0_, gx_, gy_);
  }

  void InverseSearchAndDensify(FlowField& flow) const {
    const int w = i0_.width, h = i0_.height;
    const int p = std::min({params_.patch_size, w, h});
    const int stride = std::max(1, params_.patch_size / 2);
    const auto xs = PatchOrigins(w, p, stride);
    const auto ys = PatchOrigins(h, p, stride);

    Plane sum_u(w, h), sum_v(w, h), sum_c(w, h);
    for (int py : ys) {
      for (int px : xs) {
        float u = flow.u.at(px + p / 2, py + p / 2);
        float v = flow.v.at(px + p / 2, py + p / 2);
        SearchPatch(px, py, p, u, v);
        for (int y = py; y < py + p; ++y)
          for (int x = px; x < px + p; ++x) {
            const float diff = Sample(i1_, x + u, y + v) - i0_.at(x, y);
            const float c = 1.0f / std::max(1.0f, std::abs(diff));
            sum_u.at(x, y) += c * u;
            sum_v.at(x, y) += c * v;
            sum_c.at(x, y) += c;
          }
      }
    }
    for (size_t i = 0; i < sum_c.data.size(); ++i) {
      if (sum_c.data[i] > 0.0f) {
        flow.u.data[i] = sum_u.data[i] / sum_c.data[i];
        flow.v.data[i] = sum_v.data[i] / sum_c.data[i];
      }
    }
  }

  // Horn-Schunck style sweeps on the linearized data term around the current flow.
  void Refine(FlowField& flow) const {
    const int w = i0_.width, h = i0_.height;
    const float alpha = params_.smoothing_weight;
    Plane warped(w, h), gx1, gy1;
    Plane ix(w, h), iy(w, h), c0(w, h), denom(w, h);
    for (int sweep = 0; sweep < params_.smoothing_sweeps; ++sweep) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) warped.at(x, y) = Sample(i1_, x + flow.u.at(x, y), y + flow.v.at(x, y));
      Gradients(warped, gx1, gy1);
      for (size_t i = 0; i < warped.data.size(); ++i) {
        ix.data[i] = 0.5f * (gx_.data[i] + gx1.data[i]);
        iy.data[i] = 0.5f * (gy_.data[i] + gy1.data[i]);
        const float it = warped.data[i] - i0_.data[i];
        // residual of Ix*U + Iy*V + c0 = 0 at U = u, V = v equals It
        c0.data[i] = it - ix.data[i] * flow.u.data[i] - iy.data[i] * flow.v.data[i];
        denom.data[i] = alpha + ix.data[i] * ix.data[i] + iy.data[i] * iy.data[i];
      }
      Plane u = flow.u, v = flow.v, nu(w, h), nv(w, h);
      for (int it = 0; it < kJacobiIterations; ++it) {
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            const float ub = 0.25f * (u.at(xl, y) + u.at(xr, y) + u.at(x, yu) + u.at(x, yd));
            const float vb = 0.25f * (v.at(xl, y) + v.at(xr, y) + v.at(x, yu) + v.at(x, yd));
            const float gx = ix.at(x, y), gy = iy.at(x, y);
            const float r = (gx * ub + gy * vb + c0.at(x, y)) / denom.at(x, y);
            nu.at(x, y) = ub - gx * r;
            nv.at(x, y) = vb - gy * r;
          }
        std::swap(u, nu);
        std::swap(v, nv);
      }
      flow.u = std::move(u);
      flow.v = std::move(v);
    }
  }

 private:
  float PatchSsd(int px, int py, int p, float u, float v) const {
    float ssd = 0;
    for (int y = py; y < py + p; ++y)
      for (int x = px; x < px + p; ++x) {
        const float d = Sample(i1_, x + u, y + v) - i0_.at(x, y);
        ssd += d * d;
      }
    return ssd;
  }

  // Inverse-compositional Gauss-Newton on one patch; the Hessian comes from prev-frame gradients.
  void SearchPatch(int px, int py, int p, float& u, float& v) const {
    double hxx = 0, hxy = 0, hyy = 0;
    for (int y = py; y < py + p; ++y)
      for (int x = px; x < px + p; ++x) {
        const double gx = gx_.at(x, y), gy = gy_.at(x, y);
        hxx += gx * gx;
        hxy += gx * gy;
        hyy += gy * gy;
      }
    const double det = hxx * hyy - hxy * hxy;
    if (std::abs(det) < kHessianFloor) return;
    const double inv11 = hyy / det, inv12 = -hxy / det, inv22 = hxx / det;

    const float u0 = u, v0 = v;
    float best = PatchSsd(px, py, p, u, v);
    for (int it = 0; it < params_.iterations; ++it) {
      double bx = 0, by = 0;
      for (int y = py; y < py + p; ++y)
        for (int x = px; x < px + p; ++x) {
          const double d = Sample(i1_, x + u, y + v) - i0_.at(x, y);
          bx += d * gx_.at(x, y);
          by += d * gy_.at(x, y);
        }
      const float nu = u - static_cast<float>(inv11 * bx + inv12 * by);
      const float nv = v - static_cast<float>(inv12 * bx + inv22 * by);
      const float ssd = PatchSsd(px, py, p, nu, nv);
      if (!(ssd < best)) break;
      best = ssd;
      u = nu;
      v = nv;
    }
    if (std::hypot(u - u0, v - v0) > static_cast<float>(p)) {
      u = u0;
      v = v0;
    }
  }

  const Plane& i0_;
  const Plane& i1_;
  const FlowParams& params_;
  Plane gx_, gy_;
};

FlowField UpsampleFlow(const FlowField& coarse, int width, int height) {
  FlowField out(width, height);
  const float sx = static_cast<float>(coarse.width()) / width;
  const float sy = static_cast<float>(coarse.height()) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const float cx = (x + 0.5f) * sx - 0.5f, cy = (y + 0.5f) * sy - 0.5f;
      out.u.at(x, y) = Sample(coarse.u, cx, cy) / sx;
      out.v.at(x, y) = Sample(coarse.v, cx, cy) / sy;
    }
  return out;
}

}  // namespace

FlowField EstimateFlow(const Plane& prev_luma, const Plane& next_luma, const FlowParams& params) {
  params.Validate();
  if (prev_luma.width != next_luma.width || prev_luma.height != next_luma.height) {
    Fail(ErrorKind::kShape, "estimate_flow: frames differ in size");
  }
  std::vector<Plane> p0 = {prev_luma}, p1 = {next_luma};
  while (static_cast<int>(p0.size()) < params.levels) {
    const Plane& last = p0.back();
    if ((last.width + 1) / 2 < 2 * params.patch_size || (last.height + 1) / 2 < 2 * params.patch_size) break;
    p0.push_back(Downsample(last));
    p1.push_back(Downsample(p1.back()));
  }

  FlowField flow(p0.back().width, p0.back().height);
  for (int level = static_cast<int>(p0.size()) - 1; level >= 0; --level) {
    const Plane& i0 = p0[level];
    if (flow.width() != i0.width || flow.height() != i0.height) flow = UpsampleFlow(flow, i0.width, i0.height);
    LevelSolver solver(i0, p1[level], params);
    solver.InverseSearchAndDensify(flow);
    solver.Refine(flow);
  }
  for (const Plane* plane : {&flow.u, &flow.v})
    for (float value : plane->data)
      if (!std::isfinite(value)) Fail(ErrorKind::kComputation, "estimate_flow: non-finite flow");
  return flow;
}

FlowField EstimateFlow(const Frame& prev, const Frame& next, const FlowParams& params) {
  if (prev.width() != next.width() || prev.height() != next.height()) {
    Fail(ErrorKind::kShape, "estimate_flow: frames differ in size (" + std::to_string(prev.width()) + "x" +
                                std::to_string(prev.height()) + " vs " + std::to_string(next.width()) + "x" +
                                std::to_string(next.height()) + ")");
  }
  return EstimateFlow(LumaCodeValues(prev), LumaCodeValues(next), params);
}

// --- .flo -------------------------------------------------------------------------

namespace {
constexpr float kFloMagic = 202021.25f;
}

FlowField ParseFlo(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12) Fail(ErrorKind::kFormat, "flo: file shorter than its header");
  float magic;
  int32_t w, h;
  std::memcpy(&magic, bytes.data(), 4);
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  if (magic != kFloMagic) Fail(ErrorKind::kFormat, "flo: bad magic");
  if (w <= 0 || h <= 0) Fail(ErrorKind::kFormat, "flo: non-positive dimensions");
  const size_t n = static_cast<size_t>(w) * h;
  if (bytes.size() - 12 != n * 8) {
    Fail(ErrorKind::kTruncated, "flo: payload has " + std::to_string(bytes.size() - 12) + " bytes, expected " +
                                    std::to_string(n * 8));
  }
  FlowField f(w, h);
  const uint8_t* p = bytes.data() + 12;
  for (size_t i = 0; i < n; ++i) {
    std::memcpy(&f.u.data[i], p + 8 * i, 4);
    std::memcpy(&f.v.data[i], p + 8 * i + 4, 4);
  }
  return f;
}

std::vector<uint8_t> SerializeFlo(const FlowField& field) {
  static_assert(std::endian::native == std::endian::little);
  const int32_t w = field.width(), h = field.height();
  std::vector<uint8_t> out(12 + static_cast<size_t>(w) * h * 8);
  std::memcpy(out.data(), &kFloMagic, 4);
  std::memcpy(out.data() + 4, &w, 4);
  std::memcpy(out.data() + 8, &h, 4);
  uint8_t* p = out.data() + 12;
  for (size_t i = 0; i < field.u.data.size(); ++i) {
    std::memcpy(p + 8 * i, &field.u.data[i], 4);
    std::memcpy(p + 8 * i + 4, &field.v.data[i], 4);
  }
  return out;
}

FlowField ReadFlo(const fs::path& path) { return ParseFlo(ReadFileBytes(path)); }
void WriteFlo(const FlowField& field, const fs::path& path) { WriteFileBytes(path, SerializeFlo(field)); }

// --- weights ------------------------------------------------------------------------

WeightMap FlowDiffWeight(const FlowField& ref, const FlowField& dis) {
  if (ref.width() != dis.width() || ref.height() != dis.height()) {
    Fail(ErrorKind::kShape, "flow_diff_weight: flow fields differ in size");
  }
  std::vector<double> mass(ref.u.data.size());
  for (size_t i = 0; i < mass.size(); ++i) {
    const double du = static_cast<double>(ref.u.data[i]) - dis.u.data[i];
    const double dv = static_cast<double>(ref.v.data[i]) - dis.v.data[i];
    mass[i] = std::sqrt(du * du + dv * dv);
  }
  return WeightMap::FromMass(ref.width(), ref.height(), std::move(mass), kFlowMassFloor);
}

WeightMap FlowMagnitudeWeight(const FlowField& field) {
  std::vector<double> mass(field.u.data.size());
  for (size_t i = 0; i < mass.size(); ++i) {
    const double u = field.u.data[i], v = field.v.data[i];
    mass[i] = std::sqrt(u * u + v * v);
  }
  return WeightMap::FromMass(field.width(), field.height(), std::move(mass), kFlowMassFloor);
}

// --- providers ------------------------------------------------------------------------

FlowField BuiltinFlowProvider::Flow(FlowSide, size_t, const Frame& prev, const Frame& next) const {
  return EstimateFlow(prev, next, params_);
}

FloDirFlowProvider::FloDirFlowProvider(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::is_directory(dir_)) Fail(ErrorKind::kIo, "flo-dir '" + dir_.string() + "' is not a directory");
}

fs::path FloDirFlowProvider::PathFor(FlowSide side, size_t t) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%s_%06zu.flo", side == FlowSide::kReference ? "ref" : "dis", t);
  return dir_ / name;
}

FlowField FloDirFlowProvider::Flow(FlowSide side, size_t t, const Frame& prev, const Frame&) const {
  const fs::path path = PathFor(side, t);
  if (!fs::exists(path)) Fail(ErrorKind::kIo, "flow provider: missing '" + path.string() + "' for frame " + std::to_string(t));
  FlowField f = ReadFlo(path);
  if (f.width() != prev.width() || f.height() != prev.height()) {
    Fail(ErrorKind::kShape, "flow provider: '" + path.string() + "' is " + std::to_string(f.width()) + "x" +
                                std::to_string(f.height()) + ", frames are " + std::to_string(prev.width()) + "x" +
                                std::to_string(prev.height()));
  }
  return f;
}

std::unique_ptr<FlowProvider> MakeFlowProvider(const std::string& spec, const FlowParams& params) {
  if (spec == "builtin") return std::make_unique<BuiltinFlowProvider>(params);
  constexpr std::string_view kPrefix = "flo-dir:";
  if (spec.starts_with(kPrefix) && spec.size() > kPrefix.size()) {
    return std::make_unique<FloDirFlowProvider>(spec.substr(kPrefix.size()));
  }
  Fail(ErrorKind::kUsage, "unknown flow provider '" + spec + "' (expected builtin or flo-dir:<path>)");
}

}  // namespace flowqa
