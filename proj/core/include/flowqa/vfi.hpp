#pragma once

#include "flowqa/frame.hpp"

namespace flowqa {

// Emits every frame `factor` times; frame rate scales by `factor`.
VideoSequence FrameRepeatUpsample(const VideoSequence& seq, int factor);

// Inserts the per-sample mean of each consecutive pair (kept as a real value, clamped to the
// colorspace range). Output has 2N-1 frames at twice the frame rate. Only factor 2 is supported.
VideoSequence FrameAverageUpsample(const VideoSequence& seq, int factor = 2);

// Keeps frames 0, step, 2*step, ...; frame rate divides by `step`.
VideoSequence TemporalSubsample(const VideoSequence& seq, int step);

}  // namespace flowqa
