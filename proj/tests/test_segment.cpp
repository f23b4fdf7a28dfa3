#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "gdsal/errors.hpp"
#include "gdsal/segment.hpp"

using namespace gdsal;

namespace {

BinaryMask block(std::size_t h, std::size_t w, std::size_t y0, std::size_t x0,
                 std::size_t bh, std::size_t bw) {
  BinaryMask m(h, w);
  for (std::size_t y = y0; y < y0 + bh; ++y) {
    for (std::size_t x = x0; x < x0 + bw; ++x) m.at(y, x) = 1;
  }
  return m;
}

BinaryMask random_mask(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  for (auto& v : m.values) v = rng() & 1;
  return m;
}

// Flat background colour with a flat square object of another colour.
Tensor two_tone(std::size_t size, const BinaryMask& object) {
  Tensor img({3, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const bool o = object(y, x);
      img.at(0, y, x) = o ? 0.9 : 0.2;
      img.at(1, y, x) = o ? 0.7 : 0.3;
      img.at(2, y, x) = o ? 0.1 : 0.25;
    }
  }
  return img;
}

SaliencyMap map_from(const BinaryMask& m, double inside) {
  SaliencyMap s(m.height, m.width);
  for (std::size_t i = 0; i < m.size(); ++i) s.values[i] = m.values[i] ? inside : 0.0;
  s.state = MapState::smoothed;
  return s;
}

// Set-based oracle: pixel index sets, intersection over union.
double jaccard_oracle(const BinaryMask& a, const BinaryMask& b) {
  std::set<std::size_t> sa, sb, both, either;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.values[i]) sa.insert(i);
    if (b.values[i]) sb.insert(i);
  }
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::inserter(both, both.end()));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(),
                 std::inserter(either, either.end()));
  return either.empty() ? 0.0 : double(both.size()) / double(either.size());
}

}  // namespace

TEST(Jaccard, Extremes) {
  const BinaryMask a = block(6, 6, 1, 1, 2, 2);
  EXPECT_EQ(jaccard(a, a), 1.0);
  EXPECT_EQ(jaccard(a, block(6, 6, 4, 4, 2, 2)), 0.0);
  EXPECT_EQ(jaccard(BinaryMask(6, 6), BinaryMask(6, 6)), 0.0);
  EXPECT_THROW(jaccard(a, BinaryMask(5, 6)), ShapeError);
}

TEST(Jaccard, ShiftedBlockIsOneThird) {
  EXPECT_DOUBLE_EQ(jaccard(block(4, 4, 1, 0, 2, 2), block(4, 4, 1, 1, 2, 2)), 1.0 / 3.0);
}

TEST(Jaccard, MatchesSetOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const BinaryMask a = random_mask(5, 5, rng), b = random_mask(5, 5, rng);
    EXPECT_EQ(jaccard(a, b), jaccard_oracle(a, b));
    EXPECT_EQ(jaccard(a, b), jaccard(b, a));
  }
}

TEST(RegionGrow, FillsFlatRegionOnly) {
  const BinaryMask obj = block(10, 10, 2, 3, 4, 5);
  const Tensor img = two_tone(10, obj);
  const std::size_t seed = 3 * 10 + 4;
  const std::vector<std::size_t> seeds{seed};
  EXPECT_EQ(region_grow(img, seeds, 0.1), obj);
  const std::vector<std::size_t> outside{0};
  BinaryMask bg = obj;
  for (auto& v : bg.values) v = !v;
  EXPECT_EQ(region_grow(img, outside, 0.0), bg);
  const std::vector<std::size_t> bad{100};
  EXPECT_THROW(region_grow(img, bad, 0.1), ShapeError);
}

TEST(Refine, FlatObjectUnderBlobGivesExactMask) {
  const BinaryMask obj = block(16, 16, 4, 5, 6, 7);
  const Tensor img = two_tone(16, obj);
  SegmentationConfig cfg;
  cfg.runs = 20;
  const SaliencyMap r = refine(img, map_from(obj, 0.3), cfg);
  EXPECT_EQ(r.state, MapState::refined);
  for (std::size_t i = 0; i < obj.size(); ++i) EXPECT_EQ(r.values[i], obj.values[i] ? 1.0 : 0.0);
}

TEST(Refine, RunsOneIsBinaryAndValuesAreMultiples) {
  std::mt19937_64 rng(2);
  Tensor img({3, 12, 12});
  for (double& v : img.data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  SaliencyMap m(12, 12);
  for (double& v : m.values) v = std::uniform_real_distribution<double>(0, 1)(rng);
  SegmentationConfig cfg;
  cfg.growth_tolerance = 0.4;
  cfg.seeds_per_run = 3;
  cfg.runs = 1;
  for (double v : refine(img, m, cfg).values) EXPECT_TRUE(v == 0.0 || v == 1.0);
  cfg.runs = 7;
  const SaliencyMap r = refine(img, m, cfg);
  for (double v : r.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    const double k = v * 7.0;
    EXPECT_NEAR(k, std::round(k), 1e-12);
  }
  EXPECT_EQ(refine(img, m, cfg).values, r.values);
  cfg.seed = 8;
  EXPECT_NE(refine(img, m, cfg).values, r.values);
}

TEST(Refine, EmptySalientSetIsFlagged) {
  const SaliencyMap r = refine(Tensor({3, 8, 8}, 0.5), SaliencyMap(8, 8), {});
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.all_zero());
  EXPECT_THROW(refine(Tensor({3, 8, 9}, 0.5), SaliencyMap(8, 8), {}), ShapeError);
  SegmentationConfig bad;
  bad.delta = 1.0;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Components, FourConnectivity) {
  BinaryMask m(3, 3);
  m.at(0, 0) = 1;
  m.at(1, 1) = 1;  // diagonal only: separate component
  m.at(1, 2) = 1;
  const auto comps = connected_components(m);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0].count(), 1u);
  EXPECT_EQ(comps[1].count(), 2u);
}

TEST(Propose, BlobYieldsItsComponent) {
  SaliencyMap refined(12, 12);
  for (std::size_t y = 3; y < 8; ++y) {
    for (std::size_t x = 2; x < 9; ++x) refined.values[y * 12 + x] = 0.55;
  }
  refined.values[5 * 12 + 5] = 1.0;  // blob core
  const auto props = propose(refined, {});
  ASSERT_FALSE(props.empty());
  BinaryMask body(12, 12);
  for (std::size_t i = 0; i < 144; ++i) body.values[i] = refined.values[i] > 0.5;
  EXPECT_NE(std::find(props.begin(), props.end(), body), props.end());
  for (const auto& p : props) EXPECT_TRUE(p.values[5 * 12 + 5]);
}

TEST(Propose, ZeroMapEmptyAndDistinctSortedCapped) {
  EXPECT_TRUE(propose(SaliencyMap(8, 8), {}).empty());
  std::mt19937_64 rng(3);
  SaliencyMap r(16, 16);
  for (double& v : r.values) v = std::uniform_int_distribution<int>(0, 10)(rng) / 10.0;
  SegmentationConfig cfg;
  cfg.proposal_budget = 12;
  const auto props = propose(r, cfg);
  EXPECT_LE(props.size(), 12u);
  for (std::size_t i = 0; i < props.size(); ++i) {
    for (std::size_t j = i + 1; j < props.size(); ++j) EXPECT_FALSE(props[i] == props[j]);
    if (i + 1 < props.size()) EXPECT_GE(props[i].count(), props[i + 1].count());
  }
}

TEST(Select, ExactCopyBeatsComplement) {
  SaliencyMap refined(6, 6);
  for (std::size_t i = 0; i < 12; ++i) refined.values[i] = 1.0;
  const BinaryMask m1 = threshold_mask(refined, 0.5);
  BinaryMask comp = m1;
  for (auto& v : comp.values) v = !v;
  const auto sel = select(refined, {comp, m1}, {});
  ASSERT_TRUE(sel.has_value());
  EXPECT_EQ(sel->index, 1u);
  EXPECT_EQ(sel->score, 1.0);
  EXPECT_EQ(sel->mask, m1);
  EXPECT_EQ(sel->delta_value, 0.5);
}

TEST(Select, SingleEmptyAndTies) {
  SaliencyMap refined(4, 4);
  refined.values[0] = 1.0;
  const BinaryMask far = block(4, 4, 3, 3, 1, 1);
  EXPECT_EQ(select(refined, {far}, {})->index, 0u);
  EXPECT_FALSE(select(refined, {}, {}).has_value());
  const BinaryMask a = block(4, 4, 0, 0, 1, 2), b = block(4, 4, 0, 0, 2, 1);
  EXPECT_EQ(select(refined, {far, a, b}, {})->index, 1u);
}

TEST(Select, MatchesBruteForceArgmax) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    SaliencyMap refined(5, 5);
    for (double& v : refined.values) v = std::uniform_real_distribution<double>(0, 1)(rng);
    std::vector<BinaryMask> props;
    for (int k = 0; k < 6; ++k) props.push_back(random_mask(5, 5, rng));
    BinaryMask m1(5, 5);
    for (std::size_t i = 0; i < 25; ++i) m1.values[i] = refined.values[i] > 0.5 * refined.max();
    std::size_t best = 0;
    for (std::size_t k = 1; k < props.size(); ++k) {
      if (jaccard_oracle(m1, props[k]) > jaccard_oracle(m1, props[best])) best = k;
    }
    const auto sel = select(refined, props, {});
    EXPECT_EQ(sel->index, best);
    EXPECT_EQ(sel->score, jaccard_oracle(m1, props[best]));
  }
}
