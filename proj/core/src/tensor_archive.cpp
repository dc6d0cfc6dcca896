#include "flowqa/tensor_archive.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "flowqa/error.hpp"
#include "flowqa/media_io.hpp"

static_assert(std::endian::native == std::endian::little, "FLPW reader assumes a little-endian host");

namespace flowqa {

namespace {

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T Read(const char* what) {
    Need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string ReadString(size_t n, const char* what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void ReadFloats(std::vector<float>& out, size_t n, const std::string& what) {
    Need(n * sizeof(float), what.c_str());
    out.resize(n);
    std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      Fail(ErrorKind::kFormat, std::string("flpw: truncated while reading ") + what + " at byte " + std::to_string(pos_));
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

template <typename T>
void Append(std::vector<uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

size_t Tensor::numel() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

const Tensor* TensorContainer::Find(std::string_view name) const {
  for (const Tensor& t : entries)
    if (t.name == name) return &t;
  return nullptr;
}

const Tensor& TensorContainer::Get(std::string_view name) const {
  const Tensor* t = Find(name);
  if (t == nullptr) Fail(ErrorKind::kFormat, "flpw: missing entry '" + std::string(name) + "'");
  return *t;
}

TensorContainer ParseTensorContainer(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "FLPW", 4) != 0) Fail(ErrorKind::kFormat, "flpw: bad magic");
  r.ReadString(4, "magic");
  const auto version = r.Read<uint32_t>("version");
  if (version != TensorContainer::kVersion) {
    Fail(ErrorKind::kFormat, "flpw: unsupported version " + std::to_string(version));
  }
  const auto count = r.Read<uint32_t>("entry count");
  TensorContainer out;
  out.entries.reserve(std::min<size_t>(count, bytes.size() / 8));  // count is untrusted
  for (uint32_t i = 0; i < count; ++i) {
    Tensor t;
    const auto name_len = r.Read<uint16_t>("entry name length");
    t.name = r.ReadString(name_len, "entry name");
    const auto dtype = r.Read<uint8_t>("dtype");
    if (dtype != 0) Fail(ErrorKind::kFormat, "flpw: entry '" + t.name + "' has unsupported dtype " + std::to_string(dtype));
    const auto rank = r.Read<uint8_t>("rank");
    t.dims.resize(rank);
    for (auto& d : t.dims) d = r.Read<uint32_t>("dims");
    r.ReadFloats(t.data, t.numel(), "payload of '" + t.name + "'");
    out.entries.push_back(std::move(t));
  }
  const auto manifest_len = r.Read<uint32_t>("manifest length");
  out.manifest = r.ReadString(manifest_len, "manifest");
  if (!r.AtEnd()) Fail(ErrorKind::kFormat, "flpw: trailing bytes after manifest");
  return out;
}

std::vector<uint8_t> SerializeTensorContainer(const TensorContainer& container) {
  std::vector<uint8_t> out = {'F', 'L', 'P', 'W'};
  Append<uint32_t>(out, TensorContainer::kVersion);
  Append<uint32_t>(out, static_cast<uint32_t>(container.entries.size()));
  for (const Tensor& t : container.entries) {
    if (t.data.size() != t.numel()) Fail(ErrorKind::kShape, "flpw: entry '" + t.name + "' data/shape mismatch");
    Append<uint16_t>(out, static_cast<uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    Append<uint8_t>(out, 0);
    Append<uint8_t>(out, static_cast<uint8_t>(t.dims.size()));
    for (uint32_t d : t.dims) Append<uint32_t>(out, d);
    const auto* p = reinterpret_cast<const uint8_t*>(t.data.data());
    out.insert(out.end(), p, p + t.data.size() * sizeof(float));
  }
  Append<uint32_t>(out, static_cast<uint32_t>(container.manifest.size()));
  out.insert(out.end(), container.manifest.begin(), container.manifest.end());
  return out;
}

TensorContainer ReadTensorContainer(const std::filesystem::path& path) {
  return ParseTensorContainer(ReadFileBytes(path));
}

void WriteTensorContainer(const TensorContainer& container, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeTensorContainer(container));
}

}  // namespace flowqa
