#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gdsal::morph {

// Grayscale morphology on an H x W grid with a size x size square element
// centred on each pixel (size odd). Pixels outside the grid are ignored, so a
// constant grid is a fixed point of every operator.

std::vector<double> dilate(std::span<const double> grid, std::size_t height,
                           std::size_t width, std::size_t size);
std::vector<double> erode(std::span<const double> grid, std::size_t height,
                          std::size_t width, std::size_t size);

/// Dilate then erode.
std::vector<double> closing(std::span<const double> grid, std::size_t height,
                            std::size_t width, std::size_t size);
/// Erode then dilate.
std::vector<double> opening(std::span<const double> grid, std::size_t height,
                            std::size_t width, std::size_t size);

}  // namespace gdsal::morph
