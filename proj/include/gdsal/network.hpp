#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gdsal/layers.hpp"
#include "gdsal/tensor.hpp"

namespace gdsal {

/// Which output convention a classifier uses.
///   plain  - N nodes, one per class, trained on original images.
///   masked - N nodes, one per masked class, trained on masked images.
///   dual   - 2N nodes; node i is original class i, node N + i masked class i.
enum class LabelSpace : std::uint8_t { plain = 0, masked = 1, dual = 2 };

std::string_view label_space_name(LabelSpace space);
LabelSpace parse_label_space(std::string_view name);

/// Forward-pass record for one input. Holding it outside the network lets
/// several threads run inference over one shared, read-only network.
struct ForwardTrace {
  std::vector<LayerCache> layers;
  bool valid() const noexcept {
    return !layers.empty() && layers.back().valid;
  }
  /// Pre-softmax activations of the last forward call.
  const Tensor& logits() const;
  const Tensor& probabilities() const;
};

/// Layer sizes for the toy classifier: `conv_channels.size()` blocks of
/// conv3x3(same) + relu + maxpool2x2, then one hidden affine + relu, then the
/// output affine and softmax. `input_offset` is subtracted from every pixel
/// before the first layer so inputs in [0, 1] arrive roughly centred. With
/// `global_pool` the last block max-pools over its whole feature map, so the
/// hidden layer sees one value per channel wherever the object sits.
struct Architecture {
  std::size_t input_channels = 3;
  std::size_t input_size = 64;
  std::vector<std::size_t> conv_channels{8, 16, 32};
  std::size_t hidden = 64;
  double input_offset = 0.5;
  bool global_pool = true;
};

class Network {
 public:
  Network() = default;
  Network(std::vector<Layer> layers, LabelSpace space,
          std::vector<std::string> class_names, Shape input_shape,
          double input_offset = 0.0);

  /// Builds a freshly initialised network for the given label space.
  static Network build(const Architecture& arch, LabelSpace space,
                       std::vector<std::string> class_names, Rng& rng);

  LabelSpace label_space() const noexcept { return space_; }
  const std::vector<std::string>& class_names() const noexcept {
    return class_names_;
  }
  std::size_t num_classes() const noexcept { return class_names_.size(); }
  /// N for plain / masked, 2N for dual.
  std::size_t output_size() const noexcept;
  const Shape& input_shape() const noexcept { return input_shape_; }
  double input_offset() const noexcept { return input_offset_; }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  void zero_grad();

  /// Runs every layer and returns the softmax output.
  Tensor forward(const Tensor& input, ForwardTrace& trace) const;
  Tensor forward(const Tensor& input) const;

  /// Seeds backprop at the logits (below the final softmax) with an output
  /// error signal and returns the resulting gradient with respect to the
  /// input. Parameters are not touched.
  Tensor inject_output_error(const ForwardTrace& trace,
                             const Tensor& error_signal) const;

  /// Full backward from the softmax output, input gradient only.
  Tensor backward(const ForwardTrace& trace, const Tensor& output_grad) const;

  /// Backprop of a logit-level error into parameter grad slots. The input
  /// gradient is not computed.
  void accumulate_logit_gradient(const ForwardTrace& trace,
                                 const Tensor& logit_grad);

 private:
  void check_trace(const ForwardTrace& trace, const Tensor& seed,
                   std::size_t seed_layer) const;

  std::vector<Layer> layers_;
  LabelSpace space_ = LabelSpace::plain;
  std::vector<std::string> class_names_;
  Shape input_shape_;
  double input_offset_ = 0.0;
};

}  // namespace gdsal
