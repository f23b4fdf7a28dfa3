#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gdsal/tensor.hpp"

namespace gdsal {

/// 8-bit raster, interleaved channels, row-major.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> pixels;
};

void write_png(const std::filesystem::path& path, const Image8& image);
Image8 read_png(const std::filesystem::path& path);

/// Channel-first (3, H, W) tensor in [0, 1] <-> interleaved 8-bit RGB.
/// Values are rounded half-up after clamping.
Image8 tensor_to_rgb8(const Tensor& image);
Tensor rgb8_to_tensor(const Image8& image);

std::uint8_t to_u8(double unit_value);

}  // namespace gdsal
