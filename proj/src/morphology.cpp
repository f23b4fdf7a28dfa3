#include "gdsal/morphology.hpp"

#include <algorithm>

#include "gdsal/errors.hpp"

namespace gdsal::morph {
namespace {

// Separable: the square element's max/min factors into a row pass and a
// column pass.
template <class Pick>
std::vector<double> filter(std::span<const double> grid, std::size_t height,
                           std::size_t width, std::size_t size, Pick pick) {
  if (grid.size() != height * width) throw ShapeError("morphology: grid size mismatch");
  if (size == 0 || size % 2 == 0) {
    throw ConfigError("morphology: structuring element size must be odd");
  }
  const std::size_t r = size / 2;
  std::vector<double> rows(grid.size());
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t lo = x >= r ? x - r : 0;
      const std::size_t hi = std::min(width - 1, x + r);
      double v = grid[y * width + lo];
      for (std::size_t k = lo + 1; k <= hi; ++k) v = pick(v, grid[y * width + k]);
      rows[y * width + x] = v;
    }
  }
  std::vector<double> out(grid.size());
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t lo = y >= r ? y - r : 0;
    const std::size_t hi = std::min(height - 1, y + r);
    for (std::size_t x = 0; x < width; ++x) {
      double v = rows[lo * width + x];
      for (std::size_t k = lo + 1; k <= hi; ++k) v = pick(v, rows[k * width + x]);
      out[y * width + x] = v;
    }
  }
  return out;
}

}  // namespace

std::vector<double> dilate(std::span<const double> grid, std::size_t height,
                           std::size_t width, std::size_t size) {
  return filter(grid, height, width, size,
                [](double a, double b) { return std::max(a, b); });
}

std::vector<double> erode(std::span<const double> grid, std::size_t height,
                          std::size_t width, std::size_t size) {
  return filter(grid, height, width, size,
                [](double a, double b) { return std::min(a, b); });
}

std::vector<double> closing(std::span<const double> grid, std::size_t height,
                            std::size_t width, std::size_t size) {
  const auto d = dilate(grid, height, width, size);
  return erode(d, height, width, size);
}

std::vector<double> opening(std::span<const double> grid, std::size_t height,
                            std::size_t width, std::size_t size) {
  const auto e = erode(grid, height, width, size);
  return dilate(e, height, width, size);
}

}  // namespace gdsal::morph
