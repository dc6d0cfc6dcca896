#pragma once

#include <vector>

namespace flowqa {

// Non-negative spatial pooling weights summing to 1.
struct WeightMap {
  static constexpr double kSumTolerance = 1e-6;

  int width = 0;
  int height = 0;
  std::vector<double> w;
  // Set when the source signal had (near) zero mass and the map fell back to uniform.
  bool uniform_fallback = false;

  static WeightMap Uniform(int width, int height, bool fallback = false);
  // Normalizes non-negative `mass` to sum 1; falls back to uniform below `min_total`.
  static WeightMap FromMass(int width, int height, std::vector<double> mass, double min_total = 1e-8);

  double at(int x, int y) const { return w[static_cast<size_t>(y) * width + x]; }
  double Sum() const;
  // Throws kArgument if entries are negative / non-finite or the sum is off by more than tolerance.
  void Validate() const;
};

// Resamples to (height, width) and renormalizes. Downscaling uses a triangle (bilinear) filter whose
// support widens with the scale factor so that every source pixel contributes; same size is a copy.
WeightMap ResampleWeightMap(const WeightMap& map, int width, int height);

}  // namespace flowqa
