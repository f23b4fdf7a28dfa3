#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdsal/network.hpp"
#include "gdsal/tensor.hpp"

namespace gdsal {

/// Class-specific objectness costs, one per label space.
///   f1 (plain):  ln y_l             error signal  delta(i - l) - y_i
///   f2 (masked): -ln y_l            error signal  y_i - delta(i - l)
///   f3 (dual):   -ln y_{N + l}      error signal  y_i - delta(i - (N + l))
enum class CostKind { f1, f2, f3 };

std::string_view cost_name(CostKind kind);

struct Objective {
  CostKind kind = CostKind::f1;
  std::size_t label = 0;        // recognised class l
  std::size_t num_classes = 0;  // N

  /// l for f1 / f2, N + l for f3.
  std::size_t target_node() const noexcept;
  std::size_t output_size() const noexcept;
};

/// Picks the cost matching the network's label space.
Objective make_objective(const Network& net, std::size_t label);

/// Throws unless the objective's cost and size match the network.
void check_objective(const Network& net, const Objective& objective);

/// Cost value for a softmax output. Throws DomainError if the target
/// probability is zero.
double cost(const Objective& objective, std::span<const double> y);

/// Derivative of the cost with respect to the logits.
Tensor error_signal(const Objective& objective, const Tensor& y);

/// dF/dX by forward pass, then backprop of the closed-form error signal. The
/// trace is left holding the forward pass of `image`.
Tensor compute_input_gradient(const Network& net, const Objective& objective,
                              const Tensor& image, ForwardTrace& trace);
Tensor compute_input_gradient(const Network& net, const Objective& objective,
                              const Tensor& image);

enum class StepPolicy { max_change, fixed };
enum class ThresholdPolicy { mean_plus_std, constant };
enum class Norm { l2, l1, linf };

std::string_view step_policy_name(StepPolicy p);
std::string_view threshold_policy_name(ThresholdPolicy p);
std::string_view norm_name(Norm n);
StepPolicy parse_step_policy(std::string_view s);
ThresholdPolicy parse_threshold_policy(std::string_view s);
Norm parse_norm(std::string_view s);

struct SaliencyConfig {
  std::size_t iterations = 15;  // T
  StepPolicy step_policy = StepPolicy::max_change;
  // max_change: largest per-pixel change per iteration; fixed: epsilon itself.
  double step = 0.02;
  ThresholdPolicy threshold_policy = ThresholdPolicy::mean_plus_std;
  double threshold = 0.0;  // used by ThresholdPolicy::constant
  Norm norm = Norm::l2;
  std::size_t smoothing_size = 3;  // square structuring element
  bool clamp = true;               // keep pixels inside [0, 1]
};

void validate(const SaliencyConfig& cfg);

/// `refined` maps hold per-pixel agreement of repeated segmentations in [0, 1].
enum class MapState { raw, pruned, unit_norm, smoothed, refined };
std::string_view map_state_name(MapState s);

struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  MapState state = MapState::raw;
  std::string provenance;
  bool degenerate = false;  // all-zero after pruning / normalisation
  double threshold = 0.0;   // theta actually applied by postprocess

  SaliencyMap() = default;
  SaliencyMap(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0.0) {}

  double max() const;
  bool all_zero() const;
};

double map_norm(std::span<const double> values, Norm norm);

struct GdResult {
  Tensor final_image;
  double initial_cost = 0.0;
  std::vector<double> cost_trace;  // F(X^(t)) for t = 1..T
  std::vector<double> step_sizes;  // epsilon used at each iteration
  SaliencyMap raw;
};

/// Floored gradient descent on the input: each step subtracts
/// epsilon * max(dF/dX, 0), then clamps to [0, 1]. The raw map is the
/// RGB-mean of X^(0) - X^(T).
GdResult run_gd(const Network& net, const Objective& objective,
                const Tensor& image, const SaliencyConfig& cfg);

/// Threshold pruning S = max(S - theta, 0) followed by normalisation.
SaliencyMap postprocess(const SaliencyMap& raw, const SaliencyConfig& cfg);

/// theta for the configured policy on a raw map.
double resolve_threshold(const SaliencyMap& raw, const SaliencyConfig& cfg);

/// Pixelwise mean of two normalised maps, renormalised.
SaliencyMap combine(const SaliencyMap& a, const SaliencyMap& b,
                    Norm norm = Norm::l2);

/// Morphological closing then opening, renormalised.
SaliencyMap smooth(const SaliencyMap& map, const SaliencyConfig& cfg);

}  // namespace gdsal
