#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace gdsal {

/// H x W boolean raster stored one byte per pixel (0 or 1).
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0) {}

  std::size_t size() const noexcept { return values.size(); }
  bool operator()(std::size_t y, std::size_t x) const {
    return values[y * width + x] != 0;
  }
  std::uint8_t& at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  std::size_t count() const noexcept;
  bool same_dims(const BinaryMask& other) const noexcept {
    return height == other.height && width == other.width;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Masks are stored as 8-bit gray PNG, 255 for set pixels.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
/// Any nonzero gray value reads as set.
BinaryMask read_mask_png(const std::filesystem::path& path);

}  // namespace gdsal
