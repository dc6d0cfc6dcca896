#include "flowqa/frame.hpp"

#include "flowqa/error.hpp"

namespace flowqa {

const char* ColorSpaceName(ColorSpace cs) {
  return cs == ColorSpace::kYuv420_8 ? "YUV420_8" : "RGB_FLOAT";
}

Frame::Frame(ColorSpace cs, std::vector<Plane> planes) : cs_(cs), planes_(std::move(planes)) {
  if (planes_.size() != 3) Fail(ErrorKind::kShape, "frame needs 3 planes, got " + std::to_string(planes_.size()));
  width_ = planes_[0].width;
  height_ = planes_[0].height;
  if (width_ <= 0 || height_ <= 0) Fail(ErrorKind::kShape, "frame has empty luma/first plane");
  int cw = width_, ch = height_;
  if (cs_ == ColorSpace::kYuv420_8) {
    cw = (width_ + 1) / 2;
    ch = (height_ + 1) / 2;
  }
  for (size_t i = 1; i < 3; ++i) {
    if (planes_[i].width != cw || planes_[i].height != ch) {
      Fail(ErrorKind::kShape, "plane " + std::to_string(i) + " is " + std::to_string(planes_[i].width) + "x" +
                                  std::to_string(planes_[i].height) + ", expected " + std::to_string(cw) + "x" +
                                  std::to_string(ch));
    }
  }
}

Frame Frame::Yuv420(int width, int height, uint8_t y, uint8_t u, uint8_t v) {
  const int cw = (width + 1) / 2, ch = (height + 1) / 2;
  return Frame(ColorSpace::kYuv420_8, {Plane(width, height, y), Plane(cw, ch, u), Plane(cw, ch, v)});
}

Frame Frame::Rgb(int width, int height, float r, float g, float b) {
  return Frame(ColorSpace::kRgbFloat, {Plane(width, height, r), Plane(width, height, g), Plane(width, height, b)});
}

void VideoSequence::Validate() const {
  if (frames.empty()) Fail(ErrorKind::kArgument, "video sequence has no frames");
  for (size_t i = 1; i < frames.size(); ++i) {
    if (!frames[i].SameGeometry(frames[0])) {
      Fail(ErrorKind::kShape, "frame " + std::to_string(i) + " geometry differs from frame 0");
    }
  }
}

}  // namespace flowqa
