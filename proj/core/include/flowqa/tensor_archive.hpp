#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace flowqa {

// Named f32 array with explicit shape.
struct Tensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t numel() const;
  bool operator==(const Tensor&) const = default;
};

// FLPW container: magic "FLPW" | u32 version | u32 count | entries | u32 manifest length | manifest.
// Each entry: u16 name length, UTF-8 name, u8 dtype (0 = f32), u8 rank, u32 dims, raw f32 LE payload.
// All integers little-endian.
struct TensorContainer {
  static constexpr uint32_t kVersion = 1;

  std::vector<Tensor> entries;
  std::string manifest;

  const Tensor* Find(std::string_view name) const;
  const Tensor& Get(std::string_view name) const;
};

TensorContainer ParseTensorContainer(std::span<const uint8_t> bytes);
std::vector<uint8_t> SerializeTensorContainer(const TensorContainer& container);

TensorContainer ReadTensorContainer(const std::filesystem::path& path);
void WriteTensorContainer(const TensorContainer& container, const std::filesystem::path& path);

}  // namespace flowqa
