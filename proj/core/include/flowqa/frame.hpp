#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flowqa {

// Single channel of real samples, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
  std::span<float> row(int y) { return {data.data() + static_cast<size_t>(y) * width, static_cast<size_t>(width)}; }
  std::span<const float> row(int y) const {
    return {data.data() + static_cast<size_t>(y) * width, static_cast<size_t>(width)};
  }
  size_t size() const { return data.size(); }
  bool operator==(const Plane&) const = default;
};

enum class ColorSpace {
  kYuv420_8,  // Y,U,V code values 0..255 stored as reals; chroma at ceil(h/2) x ceil(w/2)
  kRgbFloat,  // R,G,B in [0,1] at full resolution
};

const char* ColorSpaceName(ColorSpace cs);

enum class ColorRange { kLimited, kFull };

// One decoded frame. Construction validates the plane geometry for the
// declared colorspace.
class Frame {
 public:
  Frame() = default;
  Frame(ColorSpace cs, std::vector<Plane> planes);

  static Frame Yuv420(int width, int height, uint8_t y, uint8_t u, uint8_t v);
  static Frame Rgb(int width, int height, float r, float g, float b);

  int width() const { return width_; }
  int height() const { return height_; }
  ColorSpace colorspace() const { return cs_; }
  const std::vector<Plane>& planes() const { return planes_; }
  const Plane& plane(size_t i) const { return planes_.at(i); }
  Plane& mutable_plane(size_t i) { return planes_.at(i); }

  bool SameGeometry(const Frame& other) const {
    return width_ == other.width_ && height_ == other.height_ && cs_ == other.cs_;
  }
  bool operator==(const Frame&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ColorSpace cs_ = ColorSpace::kRgbFloat;
  std::vector<Plane> planes_;
};

struct Rational {
  int64_t num = 30;
  int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

struct VideoSequence {
  std::vector<Frame> frames;
  Rational frame_rate;
  std::string source_path;

  size_t size() const { return frames.size(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  // Throws if frames disagree on geometry or the sequence is empty.
  void Validate() const;
};

}  // namespace flowqa
