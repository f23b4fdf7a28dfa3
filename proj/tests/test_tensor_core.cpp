#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gdsal/errors.hpp"
#include "gdsal/layers.hpp"
#include "gdsal/network.hpp"
#include "gradcheck.hpp"

using namespace gdsal;
using gdsal::testing::all_coords;
using gdsal::testing::max_fd_error;
using gdsal::testing::random_tensor;

namespace {

// Scalar probe L = sum_i r_i * layer(x)_i, so dL/dout = r.
double probe(const Layer& layer, const Tensor& x, const Tensor& r) {
  LayerCache cache;
  const Tensor y = forward(layer, x, cache);
  return std::inner_product(y.data().begin(), y.data().end(), r.data().begin(), 0.0);
}

// Checks input and parameter gradients of one layer instance.
double layer_grad_error(Layer layer, Tensor x, std::mt19937_64& rng) {
  LayerCache cache;
  const Tensor y = forward(layer, x, cache);
  const Tensor r = random_tensor(y.shape(), rng);
  for (Tensor* p : parameters(layer)) p->drop_grad();
  const Tensor dx = backward_accumulate(layer, r, cache);

  double worst = max_fd_error(x.data(), dx.data(), all_coords(x.size()),
                              [&] { return probe(layer, x, r); });
  for (Tensor* p : parameters(layer)) {
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    worst = std::max(worst, max_fd_error(p->data(), analytic, all_coords(p->size()),
                                         [&] { return probe(layer, x, r); }));
  }
  return worst;
}

}  // namespace

TEST(Tensor, ShapeAndDataAgree) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.ensure_grad().size(), 24u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
  EXPECT_THROW(t.reshaped({5}), ShapeError);
  EXPECT_THROW(Tensor({1}).grad(), StateError);
}

TEST(Layers, ReluForward) {
  LayerCache cache;
  const Tensor y = forward(Relu{}, Tensor::vector({-1, 0, 2}), cache);
  EXPECT_EQ(y, Tensor::vector({0, 0, 2}));
}

TEST(Layers, ReluBackwardGatesBySign) {
  LayerCache cache;
  forward(Relu{}, Tensor::vector({-1, 2}), cache);
  EXPECT_EQ(backward(Relu{}, Tensor::vector({5, 5}), cache), Tensor::vector({0, 5}));
}

TEST(Layers, MaxPoolTakesBlockMax) {
  LayerCache cache;
  const Tensor y = forward(MaxPool2d{2, 2}, Tensor({1, 2, 2}, {1, 2, 3, 4}), cache);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(y[0], 4.0);
}

TEST(Layers, MaxPoolTieRoutesToFirstIndex) {
  LayerCache cache;
  const MaxPool2d pool{2, 2};
  forward(pool, Tensor({1, 2, 2}, {7, 7, 7, 7}), cache);
  const Tensor dx = backward(pool, Tensor({1, 1, 1}, {1.0}), cache);
  EXPECT_EQ(dx, Tensor({1, 2, 2}, {1, 0, 0, 0}));
}

TEST(Layers, IdentityConvolutionPreservesImage) {
  std::mt19937_64 rng(1);
  Conv2d conv = make_conv2d(1, 1, 1, 0, rng);
  conv.weight[0] = 1.0;
  conv.bias[0] = 0.0;
  const Tensor x = random_tensor({1, 5, 7}, rng);
  LayerCache cache;
  EXPECT_EQ(forward(conv, x, cache), x);
}

TEST(Layers, AffineInputGradientIsTransposeProduct) {
  std::mt19937_64 rng(2);
  Affine a = make_affine(4, 3, rng);
  const Tensor x = random_tensor({4}, rng);
  const Tensor g = random_tensor({3}, rng);
  LayerCache cache;
  forward(a, x, cache);
  const Tensor dx = backward(a, g, cache);
  for (std::size_t i = 0; i < 4; ++i) {
    double expect = 0.0;
    for (std::size_t o = 0; o < 3; ++o) expect += a.weight[o * 4 + i] * g[o];
    EXPECT_NEAR(dx[i], expect, 1e-15);
  }
}

TEST(Layers, ShapeMismatchNamesLayerAndShapes) {
  std::mt19937_64 rng(3);
  LayerCache cache;
  try {
    forward(make_conv2d(3, 2, 3, 1, rng), Tensor({2, 8, 8}), cache);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("conv2d"), std::string::npos);
    EXPECT_NE(msg.find("(2, 8, 8)"), std::string::npos);
  }
  EXPECT_THROW(forward(make_affine(5, 2, rng), Tensor({4}), cache), ShapeError);
}

TEST(Layers, BackwardBeforeForwardIsAnError) {
  LayerCache empty;
  EXPECT_THROW(backward(Relu{}, Tensor::vector({1}), empty), StateError);
  LayerCache cache;
  forward(Relu{}, Tensor::vector({1, 2}), cache);
  EXPECT_THROW(backward(Relu{}, Tensor::vector({1}), cache), ShapeError);
}

TEST(Softmax, UniformAndStable) {
  const Tensor y = softmax(Tensor::vector({0, 0, 0}));
  for (double p : y.data()) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  const Tensor big = softmax(Tensor::vector({1000, 0}));
  EXPECT_NEAR(big[0], 1.0, 1e-12);
  EXPECT_NEAR(big[1], 0.0, 1e-12);
  EXPECT_TRUE(big.all_finite());
  EXPECT_THROW(softmax(Tensor({0})), ShapeError);
}

TEST(Softmax, RandomLogitsFormProbabilityVector) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor y = softmax(random_tensor({1 + static_cast<std::size_t>(trial % 9)}, rng, -50, 50));
    double total = 0.0;
    for (double p : y.data()) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

// Every layer kind, 20 random instances, 8x8 spatial inputs.
TEST(GradientCheck, EveryLayerKindMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    worst = std::max(worst, layer_grad_error(make_conv2d(2, 3, 3, 1, rng),
                                             random_tensor({2, 8, 8}, rng), rng));
    worst = std::max(worst, layer_grad_error(make_conv2d(2, 2, 3, 0, rng, 2),
                                             random_tensor({2, 8, 8}, rng), rng));
    worst = std::max(worst, layer_grad_error(MaxPool2d{2, 2}, random_tensor({2, 8, 8}, rng), rng));
    worst = std::max(worst, layer_grad_error(Relu{}, random_tensor({2, 8, 8}, rng), rng));
    worst = std::max(worst, layer_grad_error(Flatten{}, random_tensor({2, 8, 8}, rng), rng));
    worst = std::max(worst, layer_grad_error(make_affine(64, 5, rng), random_tensor({64}, rng), rng));
    worst = std::max(worst, layer_grad_error(Softmax{}, random_tensor({6}, rng, -3, 3), rng));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Network, ChainedGradientMatchesWholeNetFiniteDifferences) {
  std::mt19937_64 rng(6);
  Architecture arch{3, 16, {4, 4}, 8};
  const Network net = Network::build(arch, LabelSpace::plain, {"a", "b", "c"}, rng);
  Tensor x = random_tensor({3, 16, 16}, rng, 0, 1);
  const Tensor r = random_tensor({3}, rng);
  ForwardTrace trace;
  net.forward(x, trace);
  const Tensor dx = net.backward(trace, r);
  auto f = [&] {
    const Tensor y = net.forward(x);
    return std::inner_product(y.data().begin(), y.data().end(), r.data().begin(), 0.0);
  };
  const auto coords = gdsal::testing::sample_coords(x.size(), 100, rng);
  EXPECT_LE(max_fd_error(x.data(), dx.data(), coords, f), 1e-4);
}

TEST(Network, GlobalPoolHeadSeesOneValuePerChannel) {
  std::mt19937_64 rng(16);
  Architecture arch{3, 16, {4, 6}, 8};
  arch.global_pool = true;
  const Network net = Network::build(arch, LabelSpace::plain, {"a", "b", "c"}, rng);
  const Affine* first = nullptr;
  for (const Layer& l : net.layers()) {
    if (!first) first = std::get_if<Affine>(&l);
  }
  ASSERT_NE(first, nullptr);
  EXPECT_EQ(first->fan_in, 6u);

  Tensor x = random_tensor({3, 16, 16}, rng, 0, 1);
  const Tensor r = random_tensor({3}, rng);
  ForwardTrace trace;
  net.forward(x, trace);
  const Tensor dx = net.backward(trace, r);
  auto f = [&] {
    const Tensor y = net.forward(x);
    return std::inner_product(y.data().begin(), y.data().end(), r.data().begin(), 0.0);
  };
  const auto coords = gdsal::testing::sample_coords(x.size(), 60, rng);
  EXPECT_LE(max_fd_error(x.data(), dx.data(), coords, f), 1e-4);
}

TEST(Network, ForwardIsDeterministic) {
  std::mt19937_64 rng(7);
  const Network net = Network::build({3, 16, {4}, 8}, LabelSpace::dual, {"a", "b"}, rng);
  const Tensor x = random_tensor({3, 16, 16}, rng, 0, 1);
  EXPECT_EQ(net.forward(x), net.forward(x));
  EXPECT_EQ(net.output_size(), 4u);
}

TEST(Network, InjectOutputErrorIsLinear) {
  std::mt19937_64 rng(8);
  const Network net = Network::build({3, 16, {4}, 8}, LabelSpace::plain, {"a", "b", "c"}, rng);
  const Tensor x = random_tensor({3, 16, 16}, rng, 0, 1);
  ForwardTrace trace;
  EXPECT_THROW(net.inject_output_error(trace, Tensor({3})), StateError);
  net.forward(x, trace);

  const Tensor zero = net.inject_output_error(trace, Tensor({3}));
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);

  const Tensor e = random_tensor({3}, rng);
  Tensor e4 = e;
  for (double& v : e4.data()) v *= 4.0;  // power of two keeps scaling exact
  const Tensor g = net.inject_output_error(trace, e);
  const Tensor g4 = net.inject_output_error(trace, e4);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g4[i], 4.0 * g[i]);
  EXPECT_THROW(net.inject_output_error(trace, Tensor({2})), ShapeError);
}

TEST(Network, OutputErrorOfLogLikelihoodMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const Network net = Network::build({3, 16, {4, 4}, 8}, LabelSpace::plain, {"a", "b", "c"}, rng);
  Tensor x = random_tensor({3, 16, 16}, rng, 0, 1);
  const std::size_t l = 1;
  ForwardTrace trace;
  const Tensor y = net.forward(x, trace);
  Tensor e({3});
  for (std::size_t i = 0; i < 3; ++i) e[i] = (i == l ? 1.0 : 0.0) - y[i];
  const Tensor dx = net.inject_output_error(trace, e);
  const auto coords = gdsal::testing::sample_coords(x.size(), 60, rng);
  EXPECT_LE(max_fd_error(x.data(), dx.data(), coords,
                         [&] { return std::log(net.forward(x)[l]); }),
            1e-4);
}
