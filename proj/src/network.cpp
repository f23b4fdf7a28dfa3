#include "gdsal/network.hpp"

#include <cmath>
#include <string>

#include "gdsal/errors.hpp"

namespace gdsal {

std::string_view label_space_name(LabelSpace space) {
  switch (space) {
    case LabelSpace::plain: return "plain";
    case LabelSpace::masked: return "masked";
    case LabelSpace::dual: return "dual";
  }
  return "unknown";
}

LabelSpace parse_label_space(std::string_view name) {
  if (name == "plain") return LabelSpace::plain;
  if (name == "masked") return LabelSpace::masked;
  if (name == "dual") return LabelSpace::dual;
  throw ConfigError("unknown label space '" + std::string(name) + "'");
}

const Tensor& ForwardTrace::logits() const {
  if (!valid()) throw StateError("no cached forward pass");
  return layers.back().input;
}

const Tensor& ForwardTrace::probabilities() const {
  if (!valid()) throw StateError("no cached forward pass");
  return layers.back().output;
}

Network::Network(std::vector<Layer> layers, LabelSpace space,
                 std::vector<std::string> class_names, Shape input_shape,
                 double input_offset)
    : layers_(std::move(layers)),
      space_(space),
      class_names_(std::move(class_names)),
      input_shape_(std::move(input_shape)),
      input_offset_(input_offset) {
  if (!std::isfinite(input_offset_)) throw ConfigError("input offset must be finite");
  if (layers_.empty() || kind_of(layers_.back()) != LayerKind::softmax) {
    throw ConfigError("network must end in a softmax layer");
  }
  if (class_names_.size() < 2) {
    throw ConfigError("network needs at least two classes");
  }
  Shape s = input_shape_;
  for (const Layer& layer : layers_) s = output_shape(layer, s);
  if (s != Shape{output_size()}) {
    throw ShapeError("network output " + shape_to_string(s) +
                     " does not match label space " +
                     std::string(label_space_name(space_)) + " with " +
                     std::to_string(num_classes()) + " classes");
  }
}

Network Network::build(const Architecture& arch, LabelSpace space,
                       std::vector<std::string> class_names, Rng& rng) {
  std::vector<Layer> layers;
  std::size_t channels = arch.input_channels;
  std::size_t side = arch.input_size;
  for (std::size_t b = 0; b < arch.conv_channels.size(); ++b) {
    const std::size_t width = arch.conv_channels[b];
    layers.emplace_back(make_conv2d(channels, width, 3, 1, rng));
    layers.emplace_back(Relu{});
    const bool last = b + 1 == arch.conv_channels.size();
    const std::size_t pool = last && arch.global_pool ? side : 2;
    layers.emplace_back(MaxPool2d{pool, pool});
    channels = width;
    side /= pool;
  }
  layers.emplace_back(Flatten{});
  const std::size_t n = class_names.size();
  const std::size_t outputs = space == LabelSpace::dual ? 2 * n : n;
  layers.emplace_back(make_affine(channels * side * side, arch.hidden, rng));
  layers.emplace_back(Relu{});
  layers.emplace_back(make_affine(arch.hidden, outputs, rng));
  layers.emplace_back(Softmax{});
  return Network(std::move(layers), space, std::move(class_names),
                 {arch.input_channels, arch.input_size, arch.input_size},
                 arch.input_offset);
}

std::size_t Network::output_size() const noexcept {
  return space_ == LabelSpace::dual ? 2 * class_names_.size()
                                    : class_names_.size();
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (Layer& layer : layers_) {
    for (Tensor* p : gdsal::parameters(layer)) out.push_back(p);
  }
  return out;
}

std::vector<const Tensor*> Network::parameters() const {
  std::vector<const Tensor*> out;
  for (const Layer& layer : layers_) {
    for (const Tensor* p : gdsal::parameters(layer)) out.push_back(p);
  }
  return out;
}

void Network::zero_grad() {
  for (Tensor* p : parameters()) p->zero_grad();
}

Tensor Network::forward(const Tensor& input, ForwardTrace& trace) const {
  if (input.shape() != input_shape_) {
    throw ShapeError("network input " + shape_to_string(input.shape()) +
                     " does not match expected " +
                     shape_to_string(input_shape_));
  }
  trace.layers.resize(layers_.size());
  Tensor x = input;
  if (input_offset_ != 0.0) {
    for (double& v : x.data()) v -= input_offset_;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = gdsal::forward(layers_[i], x, trace.layers[i]);
  }
  return x;
}

Tensor Network::forward(const Tensor& input) const {
  ForwardTrace trace;
  return forward(input, trace);
}

void Network::check_trace(const ForwardTrace& trace, const Tensor& seed,
                          std::size_t seed_layer) const {
  if (!trace.valid() || trace.layers.size() != layers_.size()) {
    throw StateError("no cached forward pass for this network");
  }
  if (seed.shape() != trace.layers[seed_layer].output.shape()) {
    throw ShapeError("error signal " + shape_to_string(seed.shape()) +
                     " does not match output " +
                     shape_to_string(trace.layers[seed_layer].output.shape()));
  }
}

Tensor Network::inject_output_error(const ForwardTrace& trace,
                                    const Tensor& error_signal) const {
  const std::size_t last = layers_.size() - 1;
  check_trace(trace, error_signal, last);
  Tensor g = error_signal;
  for (std::size_t i = last; i-- > 0;) {
    g = gdsal::backward(layers_[i], g, trace.layers[i]);
  }
  return g;
}

Tensor Network::backward(const ForwardTrace& trace,
                         const Tensor& output_grad) const {
  const std::size_t last = layers_.size() - 1;
  check_trace(trace, output_grad, last);
  Tensor g = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = gdsal::backward(layers_[i], g, trace.layers[i]);
  }
  return g;
}

void Network::accumulate_logit_gradient(const ForwardTrace& trace,
                                        const Tensor& logit_grad) {
  const std::size_t last = layers_.size() - 1;
  check_trace(trace, logit_grad, last);
  Tensor g = logit_grad;
  for (std::size_t i = last; i-- > 0;) {
    g = backward_accumulate(layers_[i], g, trace.layers[i], i > 0);
  }
}

}  // namespace gdsal
