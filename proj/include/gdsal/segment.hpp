#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gdsal/mask.hpp"
#include "gdsal/saliency.hpp"
#include "gdsal/tensor.hpp"

namespace gdsal {

struct SegmentationConfig {
  double delta = 0.5;  // fraction of map max for the saliency mask M1
  double salient_fraction = 0.5;  // seed pool: pixels above this fraction of max
  std::size_t seeds_per_run = 50;
  std::size_t runs = 100;
  std::size_t proposal_budget = 50;
  double growth_tolerance = 0.1;  // Euclidean RGB distance to the region mean
  std::uint64_t seed = 7;
};

void validate(const SegmentationConfig& cfg);

/// Pixels strictly above `fraction * max(map)`; empty for an all-zero map.
BinaryMask threshold_mask(const SaliencyMap& map, double fraction);

/// Grows one region per seed (4-connected), admitting a neighbour while its
/// colour stays within `tolerance` of that region's running mean colour.
/// Returns the union of all regions.
BinaryMask region_grow(const Tensor& image, std::span<const std::size_t> seeds,
                       double tolerance);

/// Mean of `runs` seeded segmentations, each seeded from `seeds_per_run`
/// pixels drawn without replacement from the salient point set. Values are
/// multiples of 1/runs. An empty salient set yields a degenerate zero map.
SaliencyMap refine(const Tensor& image, const SaliencyMap& map,
                   const SegmentationConfig& cfg);

/// |A n B| / |A u B|, 0 when both are empty.
double jaccard(const BinaryMask& a, const BinaryMask& b);

/// 4-connected components in raster order of their first pixel.
std::vector<BinaryMask> connected_components(const BinaryMask& mask);

/// Candidate object masks: connected components of the refined map
/// thresholded at 0.1 .. 0.9, each also in a closed-then-opened form,
/// deduplicated, sorted by decreasing area and cut to the budget.
std::vector<BinaryMask> propose(const SaliencyMap& refined,
                                const SegmentationConfig& cfg);

struct Selection {
  std::size_t index = 0;
  double score = 0.0;  // Jaccard against M1
  BinaryMask mask;
  double delta_value = 0.0;  // absolute threshold used for M1
};

/// Proposal with the highest Jaccard against M1 = refined > delta * max;
/// ties go to the lower index. nullopt when there are no proposals.
std::optional<Selection> select(const SaliencyMap& refined,
                                const std::vector<BinaryMask>& proposals,
                                const SegmentationConfig& cfg);

}  // namespace gdsal
