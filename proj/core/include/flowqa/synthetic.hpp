#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowqa/eval.hpp"
#include "flowqa/frame.hpp"

namespace flowqa {

// Multi-octave value noise in [0, 1] with smoothstep interpolation between lattice points.
// The coarsest lattice spacing is `base_cell`; each further octave halves it.
Plane ValueNoise(int width, int height, uint32_t seed, int base_cell = 32, int octaves = 4);

// RGB canvas larger than the frames cut from it; channels share a luminance pattern.
struct TextureCanvas {
  Plane r, g, b;

  int width() const { return r.width; }
  int height() const { return r.height; }
  // Window with top-left corner (x0, y0); must lie inside the canvas.
  Frame Window(int x0, int y0, int width, int height) const;
};

TextureCanvas MakeTextureCanvas(int width, int height, uint32_t seed);

// Frame t shows the window at (x0 - t*vx, y0 - t*vy), so content moves by (+vx, +vy) per frame.
VideoSequence PanningClip(const TextureCanvas& canvas, int width, int height, int frames, int vx, int vy, int x0,
                          int y0);

struct SyntheticManifestOptions {
  int width = 96;
  int height = 96;
  int frames = 12;
  std::vector<int> speeds = {1, 2, 3, 4};
  uint32_t seed = 7;
};

// One distortion condition of the synthetic set.
struct SyntheticCondition {
  std::string name;       // avg2, rep2, rep3
  double severity = 1.0;  // pseudo-DMOS multiplier
};

const std::vector<SyntheticCondition>& SyntheticConditions();

// Writes ref_s<v>.y4m and dis_s<v>_<cond>.y4m clips and manifest.csv into `dir`.
// Each distorted clip drops frames from the reference and restores the rate with frame averaging
// (x2) or repetition (x2, x3); pseudo-DMOS = 10 * speed * severity.
DatasetManifest WriteSyntheticManifest(const std::filesystem::path& dir, const SyntheticManifestOptions& options = {});

}  // namespace flowqa
