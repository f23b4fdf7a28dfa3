#include "gdsal/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdsal/errors.hpp"
#include "gdsal/morphology.hpp"

namespace gdsal {

std::string_view cost_name(CostKind kind) {
  switch (kind) {
    case CostKind::f1: return "F1";
    case CostKind::f2: return "F2";
    case CostKind::f3: return "F3";
  }
  return "?";
}

std::size_t Objective::target_node() const noexcept {
  return kind == CostKind::f3 ? num_classes + label : label;
}

std::size_t Objective::output_size() const noexcept {
  return kind == CostKind::f3 ? 2 * num_classes : num_classes;
}

Objective make_objective(const Network& net, std::size_t label) {
  Objective o;
  o.label = label;
  o.num_classes = net.num_classes();
  switch (net.label_space()) {
    case LabelSpace::plain: o.kind = CostKind::f1; break;
    case LabelSpace::masked: o.kind = CostKind::f2; break;
    case LabelSpace::dual: o.kind = CostKind::f3; break;
  }
  check_objective(net, o);
  return o;
}

void check_objective(const Network& net, const Objective& o) {
  const LabelSpace want = o.kind == CostKind::f1   ? LabelSpace::plain
                          : o.kind == CostKind::f2 ? LabelSpace::masked
                                                   : LabelSpace::dual;
  if (net.label_space() != want) {
    throw ConfigError(std::string(cost_name(o.kind)) + " needs a " +
                      std::string(label_space_name(want)) +
                      " network, got " +
                      std::string(label_space_name(net.label_space())));
  }
  if (o.num_classes != net.num_classes() || o.label >= o.num_classes) {
    throw ConfigError("objective label " + std::to_string(o.label) +
                      " invalid for a network with " +
                      std::to_string(net.num_classes()) + " classes");
  }
}

double cost(const Objective& o, std::span<const double> y) {
  if (y.size() != o.output_size()) {
    throw ShapeError("cost: probability vector has length " +
                     std::to_string(y.size()) + ", expected " +
                     std::to_string(o.output_size()));
  }
  const double p = y[o.target_node()];
  if (!(p > 0.0)) {
    throw DomainError(std::string(cost_name(o.kind)) +
                      ": zero probability at target node " +
                      std::to_string(o.target_node()));
  }
  return o.kind == CostKind::f1 ? std::log(p) : -std::log(p);
}

Tensor error_signal(const Objective& o, const Tensor& y) {
  if (y.size() != o.output_size()) {
    throw ShapeError("error_signal: output length " + std::to_string(y.size()) +
                     ", expected " + std::to_string(o.output_size()));
  }
  Tensor e(y.shape());
  const std::size_t t = o.target_node();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double delta = i == t ? 1.0 : 0.0;
    e[i] = o.kind == CostKind::f1 ? delta - y[i] : y[i] - delta;
  }
  return e;
}

Tensor compute_input_gradient(const Network& net, const Objective& o,
                              const Tensor& image, ForwardTrace& trace) {
  check_objective(net, o);
  const Tensor y = net.forward(image, trace);
  return net.inject_output_error(trace, error_signal(o, y));
}

Tensor compute_input_gradient(const Network& net, const Objective& o,
                              const Tensor& image) {
  ForwardTrace trace;
  return compute_input_gradient(net, o, image, trace);
}

std::string_view step_policy_name(StepPolicy p) {
  return p == StepPolicy::max_change ? "max_change" : "fixed";
}
std::string_view threshold_policy_name(ThresholdPolicy p) {
  return p == ThresholdPolicy::mean_plus_std ? "mean_plus_std" : "constant";
}
std::string_view norm_name(Norm n) {
  switch (n) {
    case Norm::l2: return "l2";
    case Norm::l1: return "l1";
    case Norm::linf: return "linf";
  }
  return "?";
}
StepPolicy parse_step_policy(std::string_view s) {
  if (s == "max_change") return StepPolicy::max_change;
  if (s == "fixed") return StepPolicy::fixed;
  throw ConfigError("unknown step policy '" + std::string(s) + "'");
}
ThresholdPolicy parse_threshold_policy(std::string_view s) {
  if (s == "mean_plus_std") return ThresholdPolicy::mean_plus_std;
  if (s == "constant") return ThresholdPolicy::constant;
  throw ConfigError("unknown threshold policy '" + std::string(s) + "'");
}
Norm parse_norm(std::string_view s) {
  if (s == "l2") return Norm::l2;
  if (s == "l1") return Norm::l1;
  if (s == "linf") return Norm::linf;
  throw ConfigError("unknown norm '" + std::string(s) + "'");
}

std::string_view map_state_name(MapState s) {
  switch (s) {
    case MapState::raw: return "raw";
    case MapState::pruned: return "pruned";
    case MapState::unit_norm: return "unit-norm";
    case MapState::smoothed: return "smoothed";
    case MapState::refined: return "refined";
  }
  return "?";
}

void validate(const SaliencyConfig& cfg) {
  if (cfg.iterations == 0) throw ConfigError("saliency iterations must be >= 1");
  if (!(cfg.step >= 0.0) || !std::isfinite(cfg.step)) {
    throw ConfigError("saliency step must be finite and non-negative");
  }
  if (!(cfg.threshold >= 0.0)) throw ConfigError("threshold must be >= 0");
  if (cfg.smoothing_size == 0 || cfg.smoothing_size % 2 == 0) {
    throw ConfigError("smoothing element size must be odd");
  }
}

double SaliencyMap::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

bool SaliencyMap::all_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double map_norm(std::span<const double> values, Norm norm) {
  double acc = 0.0;
  switch (norm) {
    case Norm::l2:
      for (double v : values) acc += v * v;
      return std::sqrt(acc);
    case Norm::l1:
      for (double v : values) acc += std::abs(v);
      return acc;
    case Norm::linf:
      for (double v : values) acc = std::max(acc, std::abs(v));
      return acc;
  }
  return acc;
}

namespace {

void normalize_in_place(SaliencyMap& map, Norm norm) {
  const double n = map_norm(map.values, norm);
  if (n > 0.0) {
    for (double& v : map.values) v /= n;
    map.degenerate = false;
  } else {
    std::fill(map.values.begin(), map.values.end(), 0.0);
    map.degenerate = true;
  }
}

}  // namespace

GdResult run_gd(const Network& net, const Objective& objective,
                const Tensor& image, const SaliencyConfig& cfg) {
  validate(cfg);
  check_objective(net, objective);
  if (image.rank() != 3) {
    throw ShapeError("run_gd: expected a (C, H, W) image, got " +
                     shape_to_string(image.shape()));
  }
  for (double v : image.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("run_gd: input pixels must lie in [0, 1]");
  }
  GdResult r;
  Tensor x = image;
  ForwardTrace trace;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    Tensor g = compute_input_gradient(net, objective, x, trace);
    if (!g.all_finite()) {
      throw DomainError("run_gd: non-finite input gradient at iteration " +
                        std::to_string(t));
    }
    const double f = cost(objective, trace.probabilities().data());
    if (t == 1) {
      r.initial_cost = f;
    } else {
      r.cost_trace.push_back(f);
    }
    double gmax = 0.0;
    for (double& v : g.data()) {
      v = std::max(v, 0.0);
      gmax = std::max(gmax, v);
    }
    double eps = cfg.step;
    if (cfg.step_policy == StepPolicy::max_change) {
      eps = gmax > 0.0 ? cfg.step / gmax : 0.0;
    }
    r.step_sizes.push_back(eps);
    auto xd = x.data();
    for (std::size_t i = 0; i < xd.size(); ++i) {
      double v = xd[i] - eps * g[i];
      if (cfg.clamp) v = std::clamp(v, 0.0, 1.0);
      xd[i] = v;
    }
  }
  net.forward(x, trace);
  r.cost_trace.push_back(cost(objective, trace.probabilities().data()));

  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  r.raw = SaliencyMap(h, w);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < h * w; ++i) {
      r.raw.values[i] += image[c * h * w + i] - x[c * h * w + i];
    }
  }
  for (double& v : r.raw.values) v /= static_cast<double>(channels);
  r.raw.state = MapState::raw;
  r.raw.provenance = std::string(cost_name(objective.kind));
  r.final_image = std::move(x);
  return r;
}

double resolve_threshold(const SaliencyMap& raw, const SaliencyConfig& cfg) {
  if (cfg.threshold_policy == ThresholdPolicy::constant) return cfg.threshold;
  if (raw.values.empty()) return 0.0;
  const double n = static_cast<double>(raw.values.size());
  double mean = 0.0;
  for (double v : raw.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : raw.values) var += (v - mean) * (v - mean);
  return mean + std::sqrt(var / n);
}

SaliencyMap postprocess(const SaliencyMap& raw, const SaliencyConfig& cfg) {
  if (raw.state != MapState::raw) {
    throw StateError("postprocess expects a raw map, got " +
                     std::string(map_state_name(raw.state)));
  }
  SaliencyMap out = raw;
  out.threshold = resolve_threshold(raw, cfg);
  for (double& v : out.values) v = std::max(v - out.threshold, 0.0);
  out.state = MapState::pruned;
  normalize_in_place(out, cfg.norm);
  out.state = MapState::unit_norm;
  return out;
}

SaliencyMap combine(const SaliencyMap& a, const SaliencyMap& b, Norm norm) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("combine: map sizes differ (" + std::to_string(a.height) +
                     "x" + std::to_string(a.width) + " vs " +
                     std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
  }
  if (a.state != MapState::unit_norm || b.state != MapState::unit_norm) {
    throw StateError("combine expects unit-norm maps");
  }
  SaliencyMap out(a.height, a.width);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = 0.5 * (a.values[i] + b.values[i]);
  }
  normalize_in_place(out, norm);
  out.state = MapState::unit_norm;
  out.provenance = a.provenance + "+" + b.provenance;
  return out;
}

SaliencyMap smooth(const SaliencyMap& map, const SaliencyConfig& cfg) {
  if (map.state != MapState::unit_norm && map.state != MapState::pruned) {
    throw StateError("smooth expects a pruned or unit-norm map, got " +
                     std::string(map_state_name(map.state)));
  }
  SaliencyMap out = map;
  const auto closed =
      morph::closing(map.values, map.height, map.width, cfg.smoothing_size);
  out.values = morph::opening(closed, map.height, map.width, cfg.smoothing_size);
  normalize_in_place(out, cfg.norm);
  out.state = MapState::smoothed;
  return out;
}

}  // namespace gdsal
