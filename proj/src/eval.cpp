#include "gdsal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gdsal/errors.hpp"

namespace gdsal {

std::vector<std::uint8_t> quantize(std::span<const double> values) {
  std::vector<std::uint8_t> q(values.size(), 0);
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  if (!(peak > 0.0)) return q;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::max(values[i], 0.0) / peak * 255.0;
    q[i] = static_cast<std::uint8_t>(std::min(255.0, std::floor(v + 0.5)));
  }
  return q;
}

std::vector<std::uint8_t> quantize(const SaliencyMap& map) {
  return quantize(map.values);
}

PRCurve pr_curve(std::span<const std::uint8_t> quantized, const BinaryMask& truth) {
  if (quantized.size() != truth.size()) {
    throw ShapeError("pr_curve: map has " + std::to_string(quantized.size()) +
                     " pixels, ground truth " + std::to_string(truth.size()));
  }
  const std::size_t positives = truth.count();
  if (positives == 0) throw DomainError("pr_curve: empty ground truth (recall undefined)");

  // Histogram by quantised level, then suffix sums give counts for q > c.
  std::array<std::size_t, 256> pos_hist{}, neg_hist{};
  for (std::size_t i = 0; i < quantized.size(); ++i) {
    (truth.values[i] ? pos_hist : neg_hist)[quantized[i]]++;
  }
  PRCurve curve;
  std::size_t tp = 0, fp = 0;
  for (int c = kNumCutoffs - 1; c >= 0; --c) {
    PRPoint& p = curve.points[c];
    p.cutoff = c;
    p.tp = tp;
    p.fp = fp;
    p.fn = positives - tp;
    p.valid = tp + fp > 0;
    p.precision = p.valid ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    p.recall = static_cast<double>(tp) / static_cast<double>(positives);
    tp += pos_hist[c];
    fp += neg_hist[c];
  }
  return curve;
}

PRCurve pr_curve(const SaliencyMap& map, const BinaryMask& truth) {
  if (map.height != truth.height || map.width != truth.width) {
    throw ShapeError("pr_curve: map " + std::to_string(map.height) + "x" +
                     std::to_string(map.width) + " vs truth " +
                     std::to_string(truth.height) + "x" + std::to_string(truth.width));
  }
  return pr_curve(quantize(map), truth);
}

double f_beta(double precision, double recall, double beta2) {
  const double denom = beta2 * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta2) * precision * recall / denom;
}

MaxFBeta max_f_beta(const PRCurve& curve, double beta2) {
  MaxFBeta best;
  best.flagged = true;
  for (const PRPoint& p : curve.points) {
    if (!p.valid) continue;
    const double f = f_beta(p.precision, p.recall, beta2);
    if (best.flagged || f > best.value) {
      best.value = f;
      best.cutoff = p.cutoff;
      best.flagged = false;
    }
  }
  if (best.flagged) best.value = 0.0;
  return best;
}

double segmentation_f_beta(const BinaryMask& pred, const BinaryMask& truth,
                           double beta2) {
  if (!pred.same_dims(truth)) throw ShapeError("segmentation_f_beta: mask sizes differ");
  const std::size_t positives = truth.count();
  if (positives == 0) throw DomainError("segmentation_f_beta: empty ground truth");
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred.values[i]) continue;
    (truth.values[i] ? tp : fp)++;
  }
  const double precision =
      tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = static_cast<double>(tp) / static_cast<double>(positives);
  return f_beta(precision, recall, beta2);
}

SaliencyMap gaussian_baseline(std::size_t height, std::size_t width,
                              double sigma_fraction) {
  SaliencyMap m(height, width);
  const double sigma = sigma_fraction * static_cast<double>(std::min(height, width));
  const double cy = height / 2.0, cx = width / 2.0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
      m.values[y * width + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  const double n = map_norm(m.values, Norm::l2);
  for (double& v : m.values) v /= n;
  m.state = MapState::unit_norm;
  m.provenance = "gaussian";
  return m;
}

ReportBuilder::ReportBuilder(std::string method, double beta2) {
  report_.method = std::move(method);
  report_.beta2 = beta2;
}

void ReportBuilder::add_map(const std::string& id, const PRCurve& curve) {
  report_.ids.push_back(id);
  report_.max_f.push_back(max_f_beta(curve, report_.beta2).value);
  for (int c = 0; c < kNumCutoffs; ++c) {
    const PRPoint& p = curve.points[c];
    if (p.valid) {
      precision_sum_[c] += p.precision;
      ++precision_n_[c];
    }
    recall_sum_[c] += p.recall;
  }
  ++curves_;
}

void ReportBuilder::add_segmentation(const std::string& id, const BinaryMask& pred,
                                     const BinaryMask& truth) {
  report_.seg_ids.push_back(id);
  report_.seg_f.push_back(segmentation_f_beta(pred, truth, report_.beta2));
}

EvalReport ReportBuilder::finish() const {
  EvalReport r = report_;
  for (int c = 0; c < kNumCutoffs; ++c) {
    r.mean_curve[c].cutoff = c;
    r.mean_curve[c].precision =
        precision_n_[c] ? precision_sum_[c] / static_cast<double>(precision_n_[c]) : 0.0;
    r.mean_curve[c].recall = curves_ ? recall_sum_[c] / static_cast<double>(curves_) : 0.0;
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  r.mean_max_f = mean(r.max_f);
  r.mean_seg_f = mean(r.seg_f);
  return r;
}

}  // namespace gdsal
