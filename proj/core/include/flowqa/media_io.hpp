#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowqa/frame.hpp"

namespace flowqa {

// BT.709 luma coefficients.
inline constexpr double kKr = 0.2126;
inline constexpr double kKb = 0.0722;
inline constexpr double kKg = 1.0 - kKr - kKb;

// --- Y4M -------------------------------------------------------------------

// Decodes a 4:2:0 8-bit YUV4MPEG2 stream. Errors carry the offending token or
// byte offset / frame index.
VideoSequence ParseY4m(std::span<const uint8_t> bytes, std::string source_path = {});
std::vector<uint8_t> SerializeY4m(const VideoSequence& seq);

VideoSequence ReadY4m(const std::filesystem::path& path);
void WriteY4m(const VideoSequence& seq, const std::filesystem::path& path);

// --- raw planar I420 -------------------------------------------------------

VideoSequence ReadRawYuv(const std::filesystem::path& path, int width, int height, Rational fps = {});
void WriteRawYuv(const VideoSequence& seq, const std::filesystem::path& path);

// Bytes occupied by one I420 frame, chroma planes rounded up.
size_t I420FrameBytes(int width, int height);

// --- still images ----------------------------------------------------------

Frame ReadPpm(const std::filesystem::path& path);
void WritePpm(const Frame& rgb, const std::filesystem::path& path);
Frame ReadPng(const std::filesystem::path& path);
// Dispatches on extension (.ppm / .png).
Frame ReadImage(const std::filesystem::path& path);

// Every .ppm/.png in `dir`, sorted by filename.
VideoSequence ReadImageSequence(const std::filesystem::path& dir, Rational fps = {});
// Writes frame_%06d.ppm files; YUV frames are converted with limited range.
void WriteImageSequence(const VideoSequence& seq, const std::filesystem::path& dir);

// --- color -----------------------------------------------------------------

// YUV420_8 -> RGB_FLOAT, nearest-neighbour chroma, clamped to [0,1].
Frame ToRgb(const Frame& yuv, ColorRange range = ColorRange::kLimited);
// RGB_FLOAT -> YUV420_8, chroma averaged over each 2x2 block.
Frame FromRgb(const Frame& rgb, ColorRange range = ColorRange::kLimited);
// Returns the frame as RGB, converting YUV input.
Frame AsRgb(const Frame& frame, ColorRange range = ColorRange::kLimited);
// BT.709 luma on the 0..255 code-value scale. YUV frames return the Y plane.
Plane LumaCodeValues(const Frame& frame);

VideoSequence ToRgb(const VideoSequence& seq, ColorRange range = ColorRange::kLimited);

// --- generic entry points ---------------------------------------------------

struct VideoOptions {
  int width = 0;   // required for raw .yuv
  int height = 0;  // required for raw .yuv
  Rational fps;
  ColorRange range = ColorRange::kLimited;
};

// .y4m, .yuv, a directory of numbered images, or a single .ppm/.png.
VideoSequence OpenVideo(const std::filesystem::path& path, const VideoOptions& options = {});
// .y4m, .yuv, or a directory (image sequence), chosen by the path.
void WriteVideo(const VideoSequence& seq, const std::filesystem::path& path);

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace flowqa
