#include "gdsal/mask.hpp"

#include <algorithm>

#include "gdsal/errors.hpp"
#include "gdsal/image_io.hpp"

namespace gdsal {

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](auto v) { return v != 0; }));
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  Image8 img{mask.width, mask.height, 1, {}};
  img.pixels.resize(mask.size());
  std::transform(mask.values.begin(), mask.values.end(), img.pixels.begin(),
                 [](auto v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
  write_png(path, img);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const Image8 img = read_png(path);
  if (img.channels != 1) {
    throw FormatError("mask must be a grayscale PNG: " + path.string());
  }
  BinaryMask mask(img.height, img.width);
  std::transform(img.pixels.begin(), img.pixels.end(), mask.values.begin(),
                 [](auto v) { return static_cast<std::uint8_t>(v ? 1 : 0); });
  return mask;
}

}  // namespace gdsal
