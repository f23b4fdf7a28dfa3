#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gdsal/mask.hpp"
#include "gdsal/saliency.hpp"

namespace gdsal {

inline constexpr double kDefaultBeta2 = 0.3;
inline constexpr int kNumCutoffs = 256;

/// Max-rescale to [0, 255] with round-half-up. An all-zero map stays zero.
std::vector<std::uint8_t> quantize(const SaliencyMap& map);
std::vector<std::uint8_t> quantize(std::span<const double> values);

struct PRPoint {
  int cutoff = 0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0;  // 0 when invalid
  double recall = 0.0;
  bool valid = false;  // tp + fp > 0
};

/// One point per cutoff c = 0..255; pixels with quantised value > c are
/// predicted positive.
struct PRCurve {
  std::array<PRPoint, kNumCutoffs> points{};
};

PRCurve pr_curve(const SaliencyMap& map, const BinaryMask& truth);
PRCurve pr_curve(std::span<const std::uint8_t> quantized, const BinaryMask& truth);

/// (1 + b2) P R / (b2 P + R); 0 when P = R = 0.
double f_beta(double precision, double recall, double beta2 = kDefaultBeta2);

/// Largest F over valid points; 0 (and `flagged`) when none is valid.
struct MaxFBeta {
  double value = 0.0;
  int cutoff = -1;
  bool flagged = false;
};
MaxFBeta max_f_beta(const PRCurve& curve, double beta2 = kDefaultBeta2);

double segmentation_f_beta(const BinaryMask& pred, const BinaryMask& truth,
                           double beta2 = kDefaultBeta2);

/// Fixed centred isotropic Gaussian, sigma = `sigma_fraction` * min(H, W).
SaliencyMap gaussian_baseline(std::size_t height, std::size_t width,
                              double sigma_fraction = 0.25);

struct MeanCurvePoint {
  int cutoff = 0;
  double precision = 0.0;  // mean over images valid at this cutoff
  double recall = 0.0;     // mean over all images
};

/// Aggregated scores for one method over a set of images.
struct EvalReport {
  std::string method;
  double beta2 = kDefaultBeta2;
  std::vector<std::string> ids;      // images with saliency maps
  std::vector<double> max_f;         // per image max F over the PR curve
  std::vector<std::string> seg_ids;  // images with binary segmentations
  std::vector<double> seg_f;         // per image segmentation F
  std::array<MeanCurvePoint, kNumCutoffs> mean_curve{};
  double mean_max_f = 0.0;
  double mean_seg_f = 0.0;
};

/// Accumulates per-image curves into an EvalReport.
class ReportBuilder {
 public:
  explicit ReportBuilder(std::string method, double beta2 = kDefaultBeta2);
  void add_map(const std::string& id, const PRCurve& curve);
  void add_segmentation(const std::string& id, const BinaryMask& pred,
                        const BinaryMask& truth);
  EvalReport finish() const;

 private:
  EvalReport report_;
  std::array<double, kNumCutoffs> precision_sum_{};
  std::array<std::size_t, kNumCutoffs> precision_n_{};
  std::array<double, kNumCutoffs> recall_sum_{};
  std::size_t curves_ = 0;
};

}  // namespace gdsal
