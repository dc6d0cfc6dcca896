#include "flowqa/vfi.hpp"

#include <algorithm>

#include "flowqa/error.hpp"

namespace flowqa {

namespace {

Frame Average(const Frame& a, const Frame& b) {
  const float hi = a.colorspace() == ColorSpace::kYuv420_8 ? 255.0f : 1.0f;
  std::vector<Plane> planes;
  for (size_t p = 0; p < a.planes().size(); ++p) {
    Plane out = a.plane(p);
    const auto& src = b.plane(p).data;
    for (size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] = std::clamp(static_cast<float>((static_cast<double>(out.data[i]) + src[i]) / 2.0), 0.0f, hi);
    }
    planes.push_back(std::move(out));
  }
  return Frame(a.colorspace(), std::move(planes));
}

}  // namespace

VideoSequence FrameRepeatUpsample(const VideoSequence& seq, int factor) {
  if (factor < 2) Fail(ErrorKind::kArgument, "repeat: factor must be >= 2, got " + std::to_string(factor));
  seq.Validate();
  VideoSequence out;
  out.source_path = seq.source_path;
  out.frame_rate = {seq.frame_rate.num * factor, seq.frame_rate.den};
  out.frames.reserve(seq.size() * factor);
  for (const Frame& f : seq.frames)
    for (int k = 0; k < factor; ++k) out.frames.push_back(f);
  return out;
}

VideoSequence FrameAverageUpsample(const VideoSequence& seq, int factor) {
  if (factor != 2) Fail(ErrorKind::kArgument, "average: only factor 2 is supported, got " + std::to_string(factor));
  seq.Validate();
  if (seq.size() < 2) Fail(ErrorKind::kDegenerate, "average: needs at least 2 frames");
  VideoSequence out;
  out.source_path = seq.source_path;
  out.frame_rate = {seq.frame_rate.num * 2, seq.frame_rate.den};
  out.frames.reserve(2 * seq.size() - 1);
  for (size_t i = 0; i + 1 < seq.size(); ++i) {
    out.frames.push_back(seq.frames[i]);
    out.frames.push_back(Average(seq.frames[i], seq.frames[i + 1]));
  }
  out.frames.push_back(seq.frames.back());
  return out;
}

VideoSequence TemporalSubsample(const VideoSequence& seq, int step) {
  if (step < 1) Fail(ErrorKind::kArgument, "subsample: step must be >= 1");
  seq.Validate();
  VideoSequence out;
  out.source_path = seq.source_path;
  out.frame_rate = {seq.frame_rate.num, seq.frame_rate.den * step};
  for (size_t i = 0; i < seq.size(); i += static_cast<size_t>(step)) out.frames.push_back(seq.frames[i]);
  return out;
}

}  // namespace flowqa
