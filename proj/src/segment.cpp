#include "gdsal/segment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "gdsal/errors.hpp"
#include "gdsal/morphology.hpp"
#include "gdsal/rng.hpp"

namespace gdsal {

void validate(const SegmentationConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(cfg.salient_fraction >= 0.0 && cfg.salient_fraction < 1.0)) {
    throw ConfigError("salient fraction must lie in [0, 1)");
  }
  if (cfg.seeds_per_run == 0 || cfg.runs == 0 || cfg.proposal_budget == 0) {
    throw ConfigError("seeds, runs and proposal budget must be positive");
  }
  if (!(cfg.growth_tolerance >= 0.0)) throw ConfigError("growth tolerance must be >= 0");
}

BinaryMask threshold_mask(const SaliencyMap& map, double fraction) {
  BinaryMask m(map.height, map.width);
  const double cut = fraction * map.max();
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = map.values[i] > cut ? 1 : 0;
  return m;
}

BinaryMask region_grow(const Tensor& image, std::span<const std::size_t> seeds,
                       double tolerance) {
  if (image.rank() != 3) throw ShapeError("region_grow: expected (C, H, W) image");
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  const std::size_t plane = h * w;
  BinaryMask fg(h, w);
  // Pixels examined by the current region carry its stamp.
  std::vector<std::size_t> stamp(plane, 0);
  std::size_t region_id = 0;
  std::vector<double> mean(channels);
  std::deque<std::size_t> queue;
  const double tol2 = tolerance * tolerance;

  for (std::size_t seed : seeds) {
    if (seed >= plane) throw ShapeError("region_grow: seed outside the image");
    if (fg.values[seed]) continue;
    ++region_id;
    for (std::size_t c = 0; c < channels; ++c) mean[c] = image[c * plane + seed];
    std::size_t count = 1;
    fg.values[seed] = 1;
    stamp[seed] = region_id;
    queue.assign(1, seed);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      const std::size_t py = p / w, px = p % w;
      const std::size_t neighbours[4] = {
          py > 0 ? p - w : plane, py + 1 < h ? p + w : plane,
          px > 0 ? p - 1 : plane, px + 1 < w ? p + 1 : plane};
      for (std::size_t q : neighbours) {
        if (q == plane || stamp[q] == region_id || fg.values[q]) continue;
        stamp[q] = region_id;
        double d2 = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const double d = image[c * plane + q] - mean[c];
          d2 += d * d;
        }
        if (d2 > tol2) continue;
        fg.values[q] = 1;
        ++count;
        for (std::size_t c = 0; c < channels; ++c) {
          mean[c] += (image[c * plane + q] - mean[c]) / static_cast<double>(count);
        }
        queue.push_back(q);
      }
    }
  }
  return fg;
}

SaliencyMap refine(const Tensor& image, const SaliencyMap& map,
                   const SegmentationConfig& cfg) {
  validate(cfg);
  if (image.rank() != 3 || image.dim(1) != map.height || image.dim(2) != map.width) {
    throw ShapeError("refine: image " + shape_to_string(image.shape()) +
                     " does not match map " + std::to_string(map.height) + "x" +
                     std::to_string(map.width));
  }
  SaliencyMap out(map.height, map.width);
  out.state = MapState::refined;
  out.provenance = map.provenance + "/refined";

  const BinaryMask salient = threshold_mask(map, cfg.salient_fraction);
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < salient.size(); ++i) {
    if (salient.values[i]) pool.push_back(i);
  }
  if (pool.empty()) {
    out.degenerate = true;
    return out;
  }
  std::vector<std::size_t> counts(out.values.size(), 0);
  std::vector<std::size_t> seeds;
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    auto rng = make_rng(cfg.seed, "refine", run);
    seeds.clear();
    std::sample(pool.begin(), pool.end(), std::back_inserter(seeds),
                std::min(cfg.seeds_per_run, pool.size()), rng);
    const BinaryMask seg = region_grow(image, seeds, cfg.growth_tolerance);
    for (std::size_t i = 0; i < seg.size(); ++i) counts[i] += seg.values[i];
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.values[i] = static_cast<double>(counts[i]) / static_cast<double>(cfg.runs);
  }
  return out;
}

double jaccard(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_dims(b)) {
    throw ShapeError("jaccard: mask sizes differ (" + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) +
                     "x" + std::to_string(b.width) + ")");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.values[i] != 0, y = b.values[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<BinaryMask> connected_components(const BinaryMask& mask) {
  const std::size_t h = mask.height, w = mask.width, n = mask.size();
  std::vector<bool> seen(n, false);
  std::vector<BinaryMask> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (!mask.values[start] || seen[start]) continue;
    BinaryMask comp(h, w);
    stack.assign(1, start);
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      comp.values[p] = 1;
      const std::size_t y = p / w, x = p % w;
      auto visit = [&](std::size_t q) {
        if (mask.values[q] && !seen[q]) {
          seen[q] = true;
          stack.push_back(q);
        }
      };
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
    }
    out.push_back(std::move(comp));
  }
  return out;
}

namespace {

BinaryMask close_open(const BinaryMask& m) {
  std::vector<double> grid(m.values.begin(), m.values.end());
  grid = morph::closing(grid, m.height, m.width, 3);
  grid = morph::opening(grid, m.height, m.width, 3);
  BinaryMask out(m.height, m.width);
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = grid[i] > 0.5 ? 1 : 0;
  return out;
}

}  // namespace

std::vector<BinaryMask> propose(const SaliencyMap& refined,
                                const SegmentationConfig& cfg) {
  std::vector<BinaryMask> candidates;
  auto add = [&](BinaryMask m) {
    if (m.count() == 0) return;
    if (std::find(candidates.begin(), candidates.end(), m) != candidates.end()) return;
    candidates.push_back(std::move(m));
  };
  for (int level = 1; level <= 9; ++level) {
    BinaryMask above(refined.height, refined.width);
    const double cut = level / 10.0;
    for (std::size_t i = 0; i < above.size(); ++i) {
      above.values[i] = refined.values[i] > cut ? 1 : 0;
    }
    for (BinaryMask& comp : connected_components(above)) {
      BinaryMask smoothed = close_open(comp);
      add(std::move(comp));
      add(std::move(smoothed));
    }
  }
  std::vector<std::size_t> area(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) area[i] = candidates[i].count();
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return area[a] > area[b]; });
  std::vector<BinaryMask> out;
  for (std::size_t i = 0; i < order.size() && out.size() < cfg.proposal_budget; ++i) {
    out.push_back(std::move(candidates[order[i]]));
  }
  return out;
}

std::optional<Selection> select(const SaliencyMap& refined,
                                const std::vector<BinaryMask>& proposals,
                                const SegmentationConfig& cfg) {
  if (proposals.empty()) return std::nullopt;
  const BinaryMask m1 = threshold_mask(refined, cfg.delta);
  Selection best;
  best.delta_value = cfg.delta * refined.max();
  best.score = -1.0;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const double j = jaccard(m1, proposals[i]);
    if (j > best.score) {
      best.score = j;
      best.index = i;
    }
  }
  best.mask = proposals[best.index];
  return best;
}

}  // namespace gdsal
