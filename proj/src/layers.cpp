#include "gdsal/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdsal/errors.hpp"

namespace gdsal {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void shape_mismatch(LayerKind kind, const Shape& got,
                                 const std::string& expected) {
  throw ShapeError(std::string(kind_name(kind)) + ": input shape " +
                   shape_to_string(got) + " incompatible with " + expected);
}

void require_rank3(LayerKind kind, const Shape& s) {
  if (s.size() != 3) shape_mismatch(kind, s, "expected (C, H, W)");
}

Shape conv_out_shape(const Conv2d& c, const Shape& in) {
  require_rank3(LayerKind::conv2d, in);
  if (in[0] != c.in_channels) {
    shape_mismatch(LayerKind::conv2d, in,
                   std::to_string(c.in_channels) + " input channels");
  }
  if (in[1] + 2 * c.padding < c.kernel || in[2] + 2 * c.padding < c.kernel) {
    shape_mismatch(LayerKind::conv2d, in,
                   "kernel " + std::to_string(c.kernel));
  }
  return {c.out_channels, (in[1] + 2 * c.padding - c.kernel) / c.stride + 1,
          (in[2] + 2 * c.padding - c.kernel) / c.stride + 1};
}

Shape pool_out_shape(const MaxPool2d& p, const Shape& in) {
  require_rank3(LayerKind::maxpool2d, in);
  if (in[1] < p.kernel || in[2] < p.kernel) {
    shape_mismatch(LayerKind::maxpool2d, in,
                   "pool window " + std::to_string(p.kernel));
  }
  return {in[0], (in[1] - p.kernel) / p.stride + 1,
          (in[2] - p.kernel) / p.stride + 1};
}

Shape affine_out_shape(const Affine& a, const Shape& in) {
  if (in.size() != 1 || in[0] != a.fan_in) {
    shape_mismatch(LayerKind::affine, in,
                   "vector of length " + std::to_string(a.fan_in));
  }
  return {a.fan_out};
}

// Copies each input plane into a zero border of `pad` pixels so the inner
// loops run without bounds checks.
std::vector<double> pad_planes(const Tensor& in, std::size_t pad) {
  const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
  const std::size_t Hp = H + 2 * pad, Wp = W + 2 * pad;
  std::vector<double> out(C * Hp * Wp, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t y = 0; y < H; ++y) {
      const double* src = in.data().data() + (c * H + y) * W;
      std::copy(src, src + W, out.data() + (c * Hp + y + pad) * Wp + pad);
    }
  }
  return out;
}

// Four partial sums let the compiler keep several multiply-adds in flight.
double row_dot(const double* g, const double* x, std::size_t n, std::size_t stride) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  if (stride == 1) {
    for (; i + 4 <= n; i += 4) {
      a0 += g[i] * x[i];
      a1 += g[i + 1] * x[i + 1];
      a2 += g[i + 2] * x[i + 2];
      a3 += g[i + 3] * x[i + 3];
    }
  }
  for (; i < n; ++i) a0 += g[i] * x[i * stride];
  return (a0 + a1) + (a2 + a3);
}

Tensor conv_forward(const Conv2d& c, const Tensor& in) {
  const Shape out_shape = conv_out_shape(c, in.shape());
  Tensor out(out_shape);
  const std::size_t P = c.padding, K = c.kernel, S = c.stride;
  const std::size_t Hp = in.dim(1) + 2 * P, Wp = in.dim(2) + 2 * P;
  const std::size_t Ho = out_shape[1], Wo = out_shape[2];
  const std::vector<double> xp = pad_planes(in, P);
  const double* w = c.weight.data().data();
  double* y = out.data().data();
  for (std::size_t o = 0; o < c.out_channels; ++o) {
    double* yo = y + o * Ho * Wo;
    std::fill(yo, yo + Ho * Wo, c.bias[o]);
    for (std::size_t i = 0; i < c.in_channels; ++i) {
      const double* xi = xp.data() + i * Hp * Wp;
      const double* wk = w + (o * c.in_channels + i) * K * K;
      for (std::size_t oy = 0; oy < Ho; ++oy) {
        double* yrow = yo + oy * Wo;
        for (std::size_t ky = 0; ky < K; ++ky) {
          const double* xrow = xi + (oy * S + ky) * Wp;
          for (std::size_t kx = 0; kx < K; ++kx) {
            const double wv = wk[ky * K + kx];
            const double* xs = xrow + kx;
            if (S == 1) {
              for (std::size_t ox = 0; ox < Wo; ++ox) yrow[ox] += wv * xs[ox];
            } else {
              for (std::size_t ox = 0; ox < Wo; ++ox) yrow[ox] += wv * xs[ox * S];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv_backward(const Conv2d& c, const Tensor& upstream,
                     const Tensor& in, double* dw, double* db, bool input_grad) {
  const std::size_t H = in.dim(1), W = in.dim(2);
  const std::size_t P = c.padding, K = c.kernel, S = c.stride;
  const std::size_t Hp = H + 2 * P, Wp = W + 2 * P;
  const std::size_t Ho = upstream.dim(1), Wo = upstream.dim(2);
  const std::vector<double> xp = dw ? pad_planes(in, P) : std::vector<double>{};
  std::vector<double> dxp(input_grad ? c.in_channels * Hp * Wp : 0, 0.0);
  const double* w = c.weight.data().data();
  const double* g = upstream.data().data();
  for (std::size_t o = 0; o < c.out_channels; ++o) {
    const double* go = g + o * Ho * Wo;
    if (db) {
      double s = 0.0;
      for (std::size_t j = 0; j < Ho * Wo; ++j) s += go[j];
      db[o] += s;
    }
    for (std::size_t i = 0; i < c.in_channels; ++i) {
      double* dxi = input_grad ? dxp.data() + i * Hp * Wp : nullptr;
      const double* xi = dw ? xp.data() + i * Hp * Wp : nullptr;
      const std::size_t wbase = (o * c.in_channels + i) * K * K;
      for (std::size_t ky = 0; ky < K; ++ky) {
        for (std::size_t kx = 0; kx < K; ++kx) {
          const double wv = w[wbase + ky * K + kx];
          double wacc = 0.0;
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            const double* grow = go + oy * Wo;
            double* drow = dxi ? dxi + (oy * S + ky) * Wp + kx : nullptr;
            if (!dxi) {
            } else if (S == 1) {
              for (std::size_t ox = 0; ox < Wo; ++ox) drow[ox] += wv * grow[ox];
            } else {
              for (std::size_t ox = 0; ox < Wo; ++ox) drow[ox * S] += wv * grow[ox];
            }
            if (xi) {
              const double* xrow = xi + (oy * S + ky) * Wp + kx;
              wacc += row_dot(grow, xrow, Wo, S);
            }
          }
          if (dw) dw[wbase + ky * K + kx] += wacc;
        }
      }
    }
  }
  Tensor dx(in.shape());
  if (!input_grad) return dx;
  for (std::size_t i = 0; i < c.in_channels; ++i) {
    for (std::size_t y = 0; y < H; ++y) {
      const double* src = dxp.data() + (i * Hp + y + P) * Wp + P;
      std::copy(src, src + W, dx.data().data() + (i * H + y) * W);
    }
  }
  return dx;
}

Tensor pool_forward(const MaxPool2d& p, const Tensor& in,
                    std::vector<std::size_t>& routes) {
  const Shape out_shape = pool_out_shape(p, in.shape());
  Tensor out(out_shape);
  routes.assign(out.size(), 0);
  const std::size_t H = in.dim(1), W = in.dim(2);
  const std::size_t Ho = out_shape[1], Wo = out_shape[2];
  std::size_t n = 0;
  for (std::size_t ch = 0; ch < out_shape[0]; ++ch) {
    for (std::size_t oy = 0; oy < Ho; ++oy) {
      for (std::size_t ox = 0; ox < Wo; ++ox, ++n) {
        std::size_t best = (ch * H + oy * p.stride) * W + ox * p.stride;
        double best_v = in[best];
        for (std::size_t ky = 0; ky < p.kernel; ++ky) {
          for (std::size_t kx = 0; kx < p.kernel; ++kx) {
            const std::size_t idx =
                (ch * H + oy * p.stride + ky) * W + ox * p.stride + kx;
            // Strict comparison keeps the first maximum in row-major order.
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        out[n] = best_v;
        routes[n] = best;
      }
    }
  }
  return out;
}

Tensor affine_forward(const Affine& a, const Tensor& in) {
  affine_out_shape(a, in.shape());
  Tensor out({a.fan_out});
  const double* w = a.weight.data().data();
  const double* x = in.data().data();
  for (std::size_t o = 0; o < a.fan_out; ++o) {
    const double* row = w + o * a.fan_in;
    double s = a.bias[o];
    for (std::size_t i = 0; i < a.fan_in; ++i) s += row[i] * x[i];
    out[o] = s;
  }
  return out;
}

Tensor affine_backward(const Affine& a, const Tensor& upstream,
                       const Tensor& in, double* dw, double* db) {
  Tensor dx({a.fan_in});
  const double* w = a.weight.data().data();
  const double* x = in.data().data();
  double* d = dx.data().data();
  for (std::size_t o = 0; o < a.fan_out; ++o) {
    const double g = upstream[o];
    const double* row = w + o * a.fan_in;
    for (std::size_t i = 0; i < a.fan_in; ++i) d[i] += row[i] * g;
    if (dw) {
      double* drow = dw + o * a.fan_in;
      for (std::size_t i = 0; i < a.fan_in; ++i) drow[i] += g * x[i];
    }
    if (db) db[o] += g;
  }
  return dx;
}

Tensor softmax_backward(const Tensor& upstream, const Tensor& y) {
  double dot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += upstream[i] * y[i];
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    dx[i] = y[i] * (upstream[i] - dot);
  }
  return dx;
}

Tensor backward_impl(const Layer& layer, const Tensor& upstream,
                     const LayerCache& cache, double* dw, double* db,
                     bool input_grad) {
  const LayerKind kind = kind_of(layer);
  if (!cache.valid) {
    throw StateError(std::string(kind_name(kind)) +
                     ": backward called before forward");
  }
  if (upstream.shape() != cache.output.shape()) {
    throw ShapeError(std::string(kind_name(kind)) + ": upstream gradient " +
                     shape_to_string(upstream.shape()) +
                     " does not match output " +
                     shape_to_string(cache.output.shape()));
  }
  return std::visit(
      Overloaded{
          [&](const Conv2d& c) {
            return conv_backward(c, upstream, cache.input, dw, db, input_grad);
          },
          [&](const MaxPool2d&) {
            Tensor dx(cache.input.shape());
            for (std::size_t n = 0; n < upstream.size(); ++n) {
              dx[cache.routes[n]] += upstream[n];
            }
            return dx;
          },
          [&](const Relu&) {
            Tensor dx(cache.input.shape());
            for (std::size_t i = 0; i < dx.size(); ++i) {
              dx[i] = cache.input[i] > 0.0 ? upstream[i] : 0.0;
            }
            return dx;
          },
          [&](const Flatten&) { return upstream.reshaped(cache.input.shape()); },
          [&](const Affine& a) {
            return affine_backward(a, upstream, cache.input, dw, db);
          },
          [&](const Softmax&) {
            return softmax_backward(upstream, cache.output);
          },
      },
      layer);
}

}  // namespace

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::affine: return "affine";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

Conv2d make_conv2d(std::size_t in_channels, std::size_t out_channels,
                   std::size_t kernel, std::size_t padding, Rng& rng,
                   std::size_t stride) {
  Conv2d c;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.kernel = kernel;
  c.stride = stride;
  c.padding = padding;
  c.weight = Tensor({out_channels, in_channels, kernel, kernel});
  c.bias = Tensor({out_channels});
  const double bound =
      std::sqrt(6.0 / static_cast<double>(in_channels * kernel * kernel));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : c.weight.data()) v = dist(rng);
  return c;
}

Affine make_affine(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Affine a;
  a.fan_in = fan_in;
  a.fan_out = fan_out;
  a.weight = Tensor({fan_out, fan_in});
  a.bias = Tensor({fan_out});
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : a.weight.data()) v = dist(rng);
  return a;
}

LayerKind kind_of(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const Conv2d&) { return LayerKind::conv2d; },
                        [](const MaxPool2d&) { return LayerKind::maxpool2d; },
                        [](const Relu&) { return LayerKind::relu; },
                        [](const Flatten&) { return LayerKind::flatten; },
                        [](const Affine&) { return LayerKind::affine; },
                        [](const Softmax&) { return LayerKind::softmax; },
                    },
                    layer);
}

Shape output_shape(const Layer& layer, const Shape& input) {
  return std::visit(
      Overloaded{
          [&](const Conv2d& c) { return conv_out_shape(c, input); },
          [&](const MaxPool2d& p) { return pool_out_shape(p, input); },
          [&](const Relu&) { return input; },
          [&](const Flatten&) { return Shape{shape_size(input)}; },
          [&](const Affine& a) { return affine_out_shape(a, input); },
          [&](const Softmax&) {
            if (input.size() != 1 || input[0] == 0) {
              shape_mismatch(LayerKind::softmax, input, "non-empty vector");
            }
            return input;
          },
      },
      layer);
}

std::vector<Tensor*> parameters(Layer& layer) {
  if (auto* c = std::get_if<Conv2d>(&layer)) return {&c->weight, &c->bias};
  if (auto* a = std::get_if<Affine>(&layer)) return {&a->weight, &a->bias};
  return {};
}

std::vector<const Tensor*> parameters(const Layer& layer) {
  if (auto* c = std::get_if<Conv2d>(&layer)) return {&c->weight, &c->bias};
  if (auto* a = std::get_if<Affine>(&layer)) return {&a->weight, &a->bias};
  return {};
}

Tensor forward(const Layer& layer, const Tensor& input, LayerCache& cache) {
  cache.valid = false;
  cache.routes.clear();
  Tensor out = std::visit(
      Overloaded{
          [&](const Conv2d& c) { return conv_forward(c, input); },
          [&](const MaxPool2d& p) {
            return pool_forward(p, input, cache.routes);
          },
          [&](const Relu&) {
            Tensor y(input.shape());
            for (std::size_t i = 0; i < y.size(); ++i) {
              y[i] = input[i] > 0.0 ? input[i] : 0.0;
            }
            return y;
          },
          [&](const Flatten&) { return input.reshaped({input.size()}); },
          [&](const Affine& a) { return affine_forward(a, input); },
          [&](const Softmax&) {
            output_shape(Softmax{}, input.shape());
            return softmax(input);
          },
      },
      layer);
  cache.input = input;
  cache.output = out;
  cache.valid = true;
  return out;
}

Tensor backward(const Layer& layer, const Tensor& upstream,
                const LayerCache& cache) {
  return backward_impl(layer, upstream, cache, nullptr, nullptr, true);
}

Tensor backward_accumulate(Layer& layer, const Tensor& upstream,
                           const LayerCache& cache, bool input_grad) {
  auto params = parameters(layer);
  if (params.empty()) return backward_impl(layer, upstream, cache, nullptr, nullptr, true);
  double* dw = params[0]->ensure_grad().data();
  double* db = params[1]->ensure_grad().data();
  return backward_impl(layer, upstream, cache, dw, db, input_grad);
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1 || logits.empty()) {
    throw ShapeError("softmax: expected a non-empty vector, got " +
                     shape_to_string(logits.shape()));
  }
  const auto v = logits.data();
  const double peak = *std::max_element(v.begin(), v.end());
  Tensor out(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (double& p : out.data()) p /= total;
  return out;
}

}  // namespace gdsal
