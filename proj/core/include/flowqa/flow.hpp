#pragma once

#include <filesystem>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowqa/frame.hpp"
#include "flowqa/weight_map.hpp"

namespace flowqa {

// Dense motion from one frame to the next in pixels/frame: next(x + u, y + v) ~ prev(x, y).
struct FlowField {
  Plane u;
  Plane v;

  FlowField() = default;
  FlowField(int width, int height) : u(width, height), v(width, height) {}

  int width() const { return u.width; }
  int height() const { return u.height; }
  bool operator==(const FlowField&) const = default;
};

// Configuration of the built-in pyramidal inverse-search estimator.
struct FlowParams {
  int levels = 5;                  // upper bound; coarse levels too small for a patch are skipped
  int patch_size = 9;              // odd, >= 3
  int iterations = 12;             // inverse-search Gauss-Newton steps per patch
  int smoothing_sweeps = 4;        // variational refinement sweeps per level
  float smoothing_weight = 10.0f;  // smoothness weight, in squared 8-bit intensity units

  void Validate() const;
};

// Coarse-to-fine dense flow on BT.709 luma. Frames must share geometry.
FlowField EstimateFlow(const Frame& prev, const Frame& next, const FlowParams& params = {});
FlowField EstimateFlow(const Plane& prev_luma, const Plane& next_luma, const FlowParams& params = {});

// Middlebury .flo: f32 202021.25 | i32 width | i32 height | interleaved (u,v) f32, row-major.
FlowField ReadFlo(const std::filesystem::path& path);
void WriteFlo(const FlowField& field, const std::filesystem::path& path);
FlowField ParseFlo(std::span<const uint8_t> bytes);
std::vector<uint8_t> SerializeFlo(const FlowField& field);

// Per-pixel |F_ref - F_dis| normalized to sum 1; uniform fallback when the total is below 1e-8.
WeightMap FlowDiffWeight(const FlowField& ref, const FlowField& dis);
// Per-pixel |F| normalized to sum 1, same fallback.
WeightMap FlowMagnitudeWeight(const FlowField& field);

inline constexpr double kFlowMassFloor = 1e-8;

enum class FlowSide { kReference, kDistorted };

// Supplies F(t-1 -> t) for either sequence.
class FlowProvider {
 public:
  virtual ~FlowProvider() = default;
  // `t` is the index of the second frame of the pair.
  virtual FlowField Flow(FlowSide side, size_t t, const Frame& prev, const Frame& next) const = 0;
};

class BuiltinFlowProvider final : public FlowProvider {
 public:
  explicit BuiltinFlowProvider(FlowParams params = {}) : params_(params) { params_.Validate(); }
  FlowField Flow(FlowSide side, size_t t, const Frame& prev, const Frame& next) const override;

 private:
  FlowParams params_;
};

// Reads ref_%06d.flo / dis_%06d.flo from a directory.
class FloDirFlowProvider final : public FlowProvider {
 public:
  explicit FloDirFlowProvider(std::filesystem::path dir);
  FlowField Flow(FlowSide side, size_t t, const Frame& prev, const Frame& next) const override;
  std::filesystem::path PathFor(FlowSide side, size_t t) const;

 private:
  std::filesystem::path dir_;
};

// "builtin" or "flo-dir:<path>".
std::unique_ptr<FlowProvider> MakeFlowProvider(const std::string& spec, const FlowParams& params = {});

}  // namespace flowqa
