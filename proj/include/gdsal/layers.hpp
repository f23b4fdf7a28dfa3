#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include "gdsal/tensor.hpp"

namespace gdsal {

using Rng = std::mt19937_64;

enum class LayerKind : std::uint8_t {
  conv2d = 0,
  maxpool2d = 1,
  relu = 2,
  flatten = 3,
  affine = 4,
  softmax = 5,
};

std::string_view kind_name(LayerKind kind);

/// Per-call state a layer needs for its backward pass. One cache per forward
/// call; layers themselves stay immutable during inference.
struct LayerCache {
  Tensor input;
  Tensor output;
  std::vector<std::size_t> routes;  // max-pool argmax indices into input
  bool valid = false;
};

/// Kernel (out_channels, in_channels, k, k), bias (out_channels).
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Tensor weight;
  Tensor bias;
};

struct MaxPool2d {
  std::size_t kernel = 2;
  std::size_t stride = 2;
};

struct Relu {};
struct Flatten {};

/// y = W x + b with W of shape (fan_out, fan_in).
struct Affine {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  Tensor weight;
  Tensor bias;
};

struct Softmax {};

using Layer = std::variant<Conv2d, MaxPool2d, Relu, Flatten, Affine, Softmax>;

/// He-style uniform init, zero bias. `padding` of k/2 gives same-size output
/// for odd k at stride 1.
Conv2d make_conv2d(std::size_t in_channels, std::size_t out_channels,
                   std::size_t kernel, std::size_t padding, Rng& rng,
                   std::size_t stride = 1);
Affine make_affine(std::size_t fan_in, std::size_t fan_out, Rng& rng);

LayerKind kind_of(const Layer& layer);

Shape output_shape(const Layer& layer, const Shape& input);

std::vector<Tensor*> parameters(Layer& layer);
std::vector<const Tensor*> parameters(const Layer& layer);

Tensor forward(const Layer& layer, const Tensor& input, LayerCache& cache);

/// Gradient with respect to the layer input only; parameters untouched.
Tensor backward(const Layer& layer, const Tensor& upstream,
                const LayerCache& cache);

/// Like backward, but also adds parameter gradients into each parameter's
/// grad slot (allocating it on first use). With `input_grad` false a
/// convolution skips its input gradient and returns zeros.
Tensor backward_accumulate(Layer& layer, const Tensor& upstream,
                           const LayerCache& cache, bool input_grad = true);

/// Max-subtracted softmax over a vector.
Tensor softmax(const Tensor& logits);

}  // namespace gdsal
