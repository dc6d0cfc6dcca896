#include "flowqa/media_io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "flowqa/error.hpp"

namespace flowqa {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kY4mMagic = "YUV4MPEG2";
constexpr std::string_view kFrameMarker = "FRAME";

uint8_t ToByte(float v) {
  const float r = std::nearbyint(v);
  return static_cast<uint8_t>(std::clamp(r, 0.0f, 255.0f));
}

int ParsePositiveInt(std::string_view token, std::string_view value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || out <= 0) {
    Fail(ErrorKind::kFormat, "y4m: malformed header token '" + std::string(token) + "'");
  }
  return out;
}

Rational ParseRate(std::string_view token) {
  const auto colon = token.find(':', 1);
  if (colon == std::string_view::npos) {
    Fail(ErrorKind::kFormat, "y4m: malformed header token '" + std::string(token) + "'");
  }
  Rational r;
  r.num = ParsePositiveInt(token, token.substr(1, colon - 1));
  r.den = ParsePositiveInt(token, token.substr(colon + 1));
  return r;
}

void ReadPlaneBytes(Plane& plane, const uint8_t* src) {
  for (size_t i = 0; i < plane.data.size(); ++i) plane.data[i] = src[i];
}

void AppendPlaneBytes(const Plane& plane, std::vector<uint8_t>& out) {
  for (float v : plane.data) out.push_back(ToByte(v));
}

Frame DecodeI420(const uint8_t* src, int width, int height) {
  Frame f = Frame::Yuv420(width, height, 0, 0, 0);
  const size_t luma = static_cast<size_t>(width) * height;
  const size_t chroma = static_cast<size_t>((width + 1) / 2) * ((height + 1) / 2);
  ReadPlaneBytes(f.mutable_plane(0), src);
  ReadPlaneBytes(f.mutable_plane(1), src + luma);
  ReadPlaneBytes(f.mutable_plane(2), src + luma + chroma);
  return f;
}

void RequireYuv(const Frame& f, const char* what) {
  if (f.colorspace() != ColorSpace::kYuv420_8) {
    Fail(ErrorKind::kArgument, std::string(what) + ": expected a YUV420_8 frame, got " +
                                   ColorSpaceName(f.colorspace()));
  }
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::vector<uint8_t> ReadFileBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const fs::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

size_t I420FrameBytes(int width, int height) {
  return static_cast<size_t>(width) * height + 2 * static_cast<size_t>((width + 1) / 2) * ((height + 1) / 2);
}

// --- Y4M -------------------------------------------------------------------

VideoSequence ParseY4m(std::span<const uint8_t> bytes, std::string source_path) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!text.starts_with(kY4mMagic)) Fail(ErrorKind::kFormat, "y4m: missing YUV4MPEG2 magic");
  const size_t header_end = text.find('\n');
  if (header_end == std::string_view::npos) Fail(ErrorKind::kFormat, "y4m: unterminated stream header");

  int width = 0, height = 0;
  Rational rate;
  std::string_view header = text.substr(kY4mMagic.size(), header_end - kY4mMagic.size());
  while (!header.empty()) {
    if (header.front() == ' ') {
      header.remove_prefix(1);
      continue;
    }
    const size_t end = std::min(header.find(' '), header.size());
    const std::string_view token = header.substr(0, end);
    header.remove_prefix(end);
    switch (token.front()) {
      case 'W': width = ParsePositiveInt(token, token.substr(1)); break;
      case 'H': height = ParsePositiveInt(token, token.substr(1)); break;
      case 'F': rate = ParseRate(token); break;
      case 'C': {
        const std::string_view chroma = token.substr(1);
        if (chroma != "420jpeg" && chroma != "420paldv" && chroma != "420mpeg2" && chroma != "420") {
          Fail(ErrorKind::kUnsupported, "y4m: unsupported chroma format '" + std::string(token) + "'");
        }
        break;
      }
      case 'I':
      case 'A':
      case 'X': break;
      default: Fail(ErrorKind::kFormat, "y4m: malformed header token '" + std::string(token) + "'");
    }
  }
  if (width == 0) Fail(ErrorKind::kFormat, "y4m: header lacks W token");
  if (height == 0) Fail(ErrorKind::kFormat, "y4m: header lacks H token");

  VideoSequence seq;
  seq.frame_rate = rate;
  seq.source_path = std::move(source_path);
  const size_t payload = I420FrameBytes(width, height);
  size_t pos = header_end + 1;
  while (pos < text.size()) {
    if (text.substr(pos, kFrameMarker.size()) != kFrameMarker) {
      Fail(ErrorKind::kFormat, "y4m: expected FRAME marker at byte offset " + std::to_string(pos));
    }
    const size_t line_end = text.find('\n', pos);
    if (line_end == std::string_view::npos) {
      Fail(ErrorKind::kTruncated, "y4m: frame " + std::to_string(seq.frames.size()) + " header is truncated");
    }
    pos = line_end + 1;
    if (text.size() - pos < payload) {
      Fail(ErrorKind::kTruncated, "y4m: frame " + std::to_string(seq.frames.size()) + " payload truncated (" +
                                      std::to_string(text.size() - pos) + " of " + std::to_string(payload) +
                                      " bytes)");
    }
    seq.frames.push_back(DecodeI420(bytes.data() + pos, width, height));
    pos += payload;
  }
  if (seq.frames.empty()) Fail(ErrorKind::kFormat, "y4m: stream contains no frames");
  return seq;
}

std::vector<uint8_t> SerializeY4m(const VideoSequence& seq) {
  seq.Validate();
  RequireYuv(seq.frames.front(), "y4m");
  std::ostringstream header;
  header << kY4mMagic << " W" << seq.width() << " H" << seq.height() << " F" << seq.frame_rate.num << ':'
         << seq.frame_rate.den << " Ip A1:1 C420jpeg\n";
  const std::string h = header.str();
  std::vector<uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + seq.size() * (I420FrameBytes(seq.width(), seq.height()) + 6));
  for (const Frame& f : seq.frames) {
    for (char c : std::string_view("FRAME\n")) out.push_back(static_cast<uint8_t>(c));
    for (const Plane& p : f.planes()) AppendPlaneBytes(p, out);
  }
  return out;
}

VideoSequence ReadY4m(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  return ParseY4m(bytes, path.string());
}

void WriteY4m(const VideoSequence& seq, const fs::path& path) { WriteFileBytes(path, SerializeY4m(seq)); }

// --- raw I420 ----------------------------------------------------------------

VideoSequence ReadRawYuv(const fs::path& path, int width, int height, Rational fps) {
  if (width <= 0 || height <= 0) Fail(ErrorKind::kUsage, "raw yuv needs positive --width and --height");
  const auto bytes = ReadFileBytes(path);
  const size_t frame = I420FrameBytes(width, height);
  if (bytes.empty() || bytes.size() % frame != 0) {
    Fail(ErrorKind::kFormat, "raw yuv: size " + std::to_string(bytes.size()) + " is not a multiple of frame size " +
                                 std::to_string(frame) + " (remainder " + std::to_string(bytes.size() % frame) + ")");
  }
  VideoSequence seq;
  seq.frame_rate = fps;
  seq.source_path = path.string();
  for (size_t off = 0; off < bytes.size(); off += frame) seq.frames.push_back(DecodeI420(bytes.data() + off, width, height));
  return seq;
}

void WriteRawYuv(const VideoSequence& seq, const fs::path& path) {
  seq.Validate();
  RequireYuv(seq.frames.front(), "raw yuv");
  std::vector<uint8_t> out;
  for (const Frame& f : seq.frames)
    for (const Plane& p : f.planes()) AppendPlaneBytes(p, out);
  WriteFileBytes(path, out);
}

// --- still images --------------------------------------------------------------

Frame ReadPpm(const fs::path& path) {
  const auto bytes = ReadFileBytes(path);
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != "P6") Fail(ErrorKind::kFormat, "ppm: '" + path.string() + "' is not a binary P6 file");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    Fail(ErrorKind::kFormat, "ppm: malformed header in '" + path.string() + "'");
  }
  if (w <= 0 || h <= 0 || maxval != 255) Fail(ErrorKind::kUnsupported, "ppm: only 8-bit P6 is supported");
  ++pos;  // single whitespace after maxval
  const size_t need = static_cast<size_t>(w) * h * 3;
  if (bytes.size() < pos + need) Fail(ErrorKind::kTruncated, "ppm: pixel data truncated in '" + path.string() + "'");
  Frame f = Frame::Rgb(w, h, 0, 0, 0);
  for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i) {
    for (size_t c = 0; c < 3; ++c) f.mutable_plane(c).data[i] = bytes[pos + 3 * i + c] / 255.0f;
  }
  return f;
}

void WritePpm(const Frame& rgb, const fs::path& path) {
  if (rgb.colorspace() != ColorSpace::kRgbFloat) Fail(ErrorKind::kArgument, "ppm: expected an RGB frame");
  const std::string header = "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  const size_t n = static_cast<size_t>(rgb.width()) * rgb.height();
  for (size_t i = 0; i < n; ++i)
    for (size_t c = 0; c < 3; ++c) out.push_back(ToByte(rgb.plane(c).data[i] * 255.0f));
  WriteFileBytes(path, out);
}

Frame ReadPng(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  const auto bytes = ReadFileBytes(path);
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    Fail(ErrorKind::kFormat, "png: " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    Fail(ErrorKind::kFormat, "png: " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  Frame f = Frame::Rgb(w, h, 0, 0, 0);
  for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i)
    for (size_t c = 0; c < 3; ++c) f.mutable_plane(c).data[i] = buf[3 * i + c] / 255.0f;
  return f;
}

Frame ReadImage(const fs::path& path) {
  const std::string ext = Lower(path.extension().string());
  if (ext == ".ppm") return ReadPpm(path);
  if (ext == ".png") return ReadPng(path);
  Fail(ErrorKind::kUnsupported, "unsupported image extension '" + ext + "'");
}

VideoSequence ReadImageSequence(const fs::path& dir, Rational fps) {
  if (!fs::is_directory(dir)) Fail(ErrorKind::kIo, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string ext = Lower(entry.path().extension().string());
    if (entry.is_regular_file() && (ext == ".ppm" || ext == ".png")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) Fail(ErrorKind::kIo, "no .ppm/.png frames in '" + dir.string() + "'");
  VideoSequence seq;
  seq.frame_rate = fps;
  seq.source_path = dir.string();
  for (const auto& f : files) seq.frames.push_back(ReadImage(f));
  seq.Validate();
  return seq;
}

void WriteImageSequence(const VideoSequence& seq, const fs::path& dir) {
  seq.Validate();
  fs::create_directories(dir);
  char name[32];
  for (size_t i = 0; i < seq.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%06zu.ppm", i);
    WritePpm(AsRgb(seq.frames[i]), dir / name);
  }
}

// --- color -----------------------------------------------------------------------

Frame ToRgb(const Frame& yuv, ColorRange range) {
  RequireYuv(yuv, "to_rgb");
  const bool limited = range == ColorRange::kLimited;
  const double y_off = limited ? 16.0 : 0.0;
  const double y_scale = limited ? 1.0 / 219.0 : 1.0 / 255.0;
  const double c_scale = limited ? 1.0 / 224.0 : 1.0 / 255.0;
  const double r_cr = 2.0 * (1.0 - kKr);
  const double b_cb = 2.0 * (1.0 - kKb);
  const double g_cb = -b_cb * kKb / kKg;
  const double g_cr = -r_cr * kKr / kKg;

  const int w = yuv.width(), h = yuv.height();
  Frame out = Frame::Rgb(w, h, 0, 0, 0);
  const Plane& Y = yuv.plane(0);
  const Plane& U = yuv.plane(1);
  const Plane& V = yuv.plane(2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double luma = (Y.at(x, y) - y_off) * y_scale;
      const double cb = (U.at(x / 2, y / 2) - 128.0) * c_scale;
      const double cr = (V.at(x / 2, y / 2) - 128.0) * c_scale;
      out.mutable_plane(0).at(x, y) = static_cast<float>(std::clamp(luma + r_cr * cr, 0.0, 1.0));
      out.mutable_plane(1).at(x, y) = static_cast<float>(std::clamp(luma + g_cb * cb + g_cr * cr, 0.0, 1.0));
      out.mutable_plane(2).at(x, y) = static_cast<float>(std::clamp(luma + b_cb * cb, 0.0, 1.0));
    }
  }
  return out;
}

Frame FromRgb(const Frame& rgb, ColorRange range) {
  if (rgb.colorspace() != ColorSpace::kRgbFloat) Fail(ErrorKind::kArgument, "from_rgb: expected an RGB frame");
  const bool limited = range == ColorRange::kLimited;
  const int w = rgb.width(), h = rgb.height();
  Frame out = Frame::Yuv420(w, h, 0, 0, 0);
  Plane cb_full(w, h), cr_full(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = rgb.plane(0).at(x, y), g = rgb.plane(1).at(x, y), b = rgb.plane(2).at(x, y);
      const double luma = kKr * r + kKg * g + kKb * b;
      out.mutable_plane(0).at(x, y) = ToByte(static_cast<float>(limited ? 16.0 + 219.0 * luma : 255.0 * luma));
      cb_full.at(x, y) = static_cast<float>((b - luma) / (2.0 * (1.0 - kKb)));
      cr_full.at(x, y) = static_cast<float>((r - luma) / (2.0 * (1.0 - kKr)));
    }
  }
  const double c_scale = limited ? 224.0 : 255.0;
  const int cw = (w + 1) / 2, ch = (h + 1) / 2;
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      double sb = 0, sr = 0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int x = 2 * cx + dx, y = 2 * cy + dy;
          if (x < w && y < h) {
            sb += cb_full.at(x, y);
            sr += cr_full.at(x, y);
            ++n;
          }
        }
      out.mutable_plane(1).at(cx, cy) = ToByte(static_cast<float>(128.0 + c_scale * sb / n));
      out.mutable_plane(2).at(cx, cy) = ToByte(static_cast<float>(128.0 + c_scale * sr / n));
    }
  }
  return out;
}

Frame AsRgb(const Frame& frame, ColorRange range) {
  return frame.colorspace() == ColorSpace::kRgbFloat ? frame : ToRgb(frame, range);
}

Plane LumaCodeValues(const Frame& frame) {
  if (frame.colorspace() == ColorSpace::kYuv420_8) return frame.plane(0);
  Plane out(frame.width(), frame.height());
  const auto& r = frame.plane(0).data;
  const auto& g = frame.plane(1).data;
  const auto& b = frame.plane(2).data;
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = static_cast<float>(255.0 * (kKr * r[i] + kKg * g[i] + kKb * b[i]));
  }
  return out;
}

VideoSequence ToRgb(const VideoSequence& seq, ColorRange range) {
  VideoSequence out;
  out.frame_rate = seq.frame_rate;
  out.source_path = seq.source_path;
  out.frames.reserve(seq.size());
  for (const Frame& f : seq.frames) out.frames.push_back(AsRgb(f, range));
  return out;
}

// --- generic -----------------------------------------------------------------------

VideoSequence OpenVideo(const fs::path& path, const VideoOptions& options) {
  if (fs::is_directory(path)) return ReadImageSequence(path, options.fps);
  if (!fs::exists(path)) Fail(ErrorKind::kIo, "no such file '" + path.string() + "'");
  const std::string ext = Lower(path.extension().string());
  if (ext == ".y4m") return ReadY4m(path);
  if (ext == ".yuv") return ReadRawYuv(path, options.width, options.height, options.fps);
  if (ext == ".ppm" || ext == ".png") {
    VideoSequence seq;
    seq.frames.push_back(ReadImage(path));
    seq.frame_rate = options.fps;
    seq.source_path = path.string();
    return seq;
  }
  Fail(ErrorKind::kUnsupported, "unrecognised video input '" + path.string() + "'");
}

void WriteVideo(const VideoSequence& seq, const fs::path& path) {
  const std::string ext = Lower(path.extension().string());
  if (ext == ".y4m" || ext == ".yuv") {
    VideoSequence yuv = seq;
    for (Frame& f : yuv.frames)
      if (f.colorspace() == ColorSpace::kRgbFloat) f = FromRgb(f);
    if (ext == ".y4m") {
      WriteY4m(yuv, path);
    } else {
      WriteRawYuv(yuv, path);
    }
    return;
  }
  WriteImageSequence(seq, path);
}

}  // namespace flowqa
