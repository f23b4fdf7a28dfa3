#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gdsal/errors.hpp"
#include "gdsal/models.hpp"
#include "gradcheck.hpp"

using namespace gdsal;
using gdsal::testing::random_tensor;

namespace {

const Architecture kTiny{3, 8, {3}, 6, 0.5};

Network tiny_net(LabelSpace space, std::uint64_t seed, std::size_t classes = 2) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < classes; ++i) names.push_back("c" + std::to_string(i));
  return Network::build(kTiny, space, names, rng);
}

// Class 0 dark, class 1 bright: separable by mean intensity.
std::vector<TrainingExample> separable_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    const double lo = label ? 0.6 : 0.0;
    out.push_back({random_tensor({3, 8, 8}, rng, lo, lo + 0.4), label});
  }
  return out;
}

double sample_loss(const Network& net, const TrainingExample& ex) {
  ForwardTrace trace;
  net.forward(ex.image, trace);
  return cross_entropy_from_logits(trace.logits(), ex.target);
}

}  // namespace

TEST(Models, VariantsMapToLabelSpaces) {
  EXPECT_EQ(label_space_for(Variant::cnn1), LabelSpace::plain);
  EXPECT_EQ(label_space_for(Variant::cnn2), LabelSpace::masked);
  EXPECT_EQ(label_space_for(Variant::cnn3), LabelSpace::dual);
  EXPECT_EQ(parse_variant("cnn2"), Variant::cnn2);
  EXPECT_THROW(parse_variant("cnn4"), ConfigError);
  EXPECT_EQ(tiny_net(LabelSpace::dual, 1, 3).output_size(), 6u);
}

TEST(Models, CrossEntropyIsLnNAtUniformOutput) {
  EXPECT_NEAR(cross_entropy_from_logits(Tensor({5}, 2.0), 3), std::log(5.0), 1e-15);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_GE(cross_entropy_from_logits(random_tensor({4}, rng, -20, 20), i % 4), 0.0);
  }
}

TEST(Models, UniformLogitsClassifyAsZero) {
  Network net = tiny_net(LabelSpace::plain, 2, 3);
  for (Tensor* p : net.parameters()) std::fill(p->data().begin(), p->data().end(), 0.0);
  const Classification c = classify(net, Tensor({3, 8, 8}, 0.3));
  EXPECT_EQ(c.label, 0u);
  for (double p : c.probabilities.data()) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Models, ArgmaxIgnoresLogitShift) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    Tensor z = random_tensor({5}, rng, -3, 3);
    const std::size_t before = argmax(softmax(z).data());
    for (double& v : z.data()) v += 17.0;
    EXPECT_EQ(argmax(softmax(z).data()), before);
  }
  const std::vector<double> tie{0.2, 0.4, 0.4};
  EXPECT_EQ(argmax(tie), 1u);
}

TEST(Models, TrainingExamplesPerVariant) {
  GenerationConfig g;
  g.image_size = 32;
  g.train_count = 6;
  g.test_count = 0;
  const auto samples = generate_samples(g);
  std::vector<const LabeledSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto e1 = training_examples(ptrs, Variant::cnn1, 3);
  const auto e2 = training_examples(ptrs, Variant::cnn2, 3);
  const auto e3 = training_examples(ptrs, Variant::cnn3, 3);
  ASSERT_EQ(e1.size(), 6u);
  ASSERT_EQ(e2.size(), 6u);
  ASSERT_EQ(e3.size(), 12u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(e1[i].image, samples[i].image);
    EXPECT_EQ(e2[i].image, make_masked(samples[i]));
    EXPECT_EQ(e3[2 * i].target, samples[i].label);
    EXPECT_EQ(e3[2 * i + 1].target, 3 + samples[i].label);
    EXPECT_EQ(e3[2 * i + 1].image, e2[i].image);
  }
}

TEST(Models, SeparableToyReachesFullTrainAccuracy) {
  Network net = tiny_net(LabelSpace::plain, 4);
  const auto data = separable_set(40, 5);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 4;
  const TrainResult r = train(net, data, data, cfg);
  EXPECT_EQ(r.epochs.size(), 15u);
  EXPECT_EQ(r.examples_per_epoch, 40u);
  EXPECT_EQ(accuracy(net, data), 1.0);
  EXPECT_LE(r.epochs.front().loss, std::log(2.0) + 0.1);
  for (const Tensor* p : net.parameters()) EXPECT_FALSE(p->has_grad());
}

TEST(Models, TrainingIsDeterministic) {
  const auto data = separable_set(16, 6);
  TrainConfig cfg;
  cfg.epochs = 2;
  Network a = tiny_net(LabelSpace::plain, 7), b = tiny_net(LabelSpace::plain, 7);
  train(a, data, {}, cfg);
  train(b, data, {}, cfg);
  EXPECT_EQ(serialize(a), serialize(b));
}

TEST(Models, SmallSgdStepLowersSampleLoss) {
  std::mt19937_64 rng(8);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Network net = tiny_net(LabelSpace::plain, 100 + trial, 3);
    const TrainingExample ex{random_tensor({3, 8, 8}, rng, 0, 1),
                             static_cast<std::size_t>(trial % 3)};
    const double before = sample_loss(net, ex);
    ForwardTrace trace;
    const Tensor y = net.forward(ex.image, trace);
    Tensor g = y;
    g[ex.target] -= 1.0;
    net.zero_grad();
    net.accumulate_logit_gradient(trace, g);
    std::vector<std::vector<double>> velocity;
    sgd_step(net, velocity, 1e-4, 0.0, 1.0);
    if (!(sample_loss(net, ex) < before)) ++failures;
  }
  EXPECT_LE(failures, 2);
}

TEST(Models, TrainRejectsBadInputs) {
  Network net = tiny_net(LabelSpace::plain, 9);
  TrainConfig cfg;
  EXPECT_THROW(train(net, {}, {}, cfg), ConfigError);
  auto data = separable_set(4, 10);
  data[1].target = 2;
  EXPECT_THROW(train(net, data, {}, cfg), ConfigError);
  cfg.epochs = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  EXPECT_THROW(validate(cfg), ConfigError);

  Corpus corpus;
  corpus.manifest.classes = {"a", "b"};
  EXPECT_THROW(train(net, corpus, Variant::cnn3, TrainConfig{}), ConfigError);
  EXPECT_THROW(train(net, corpus, Variant::cnn1, TrainConfig{}), ConfigError);
}

// Raising the masked node's logit must pull down the original node.
TEST(Models, DualSoftmaxCoupling) {
  std::mt19937_64 rng(11);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const std::size_t l = trial % n;
    Tensor z = random_tensor({2 * n}, rng, -4, 4);
    const double before = softmax(z)[l];
    z[n + l] += 0.5;
    if (!(softmax(z)[l] < before)) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Network net = tiny_net(LabelSpace::dual, 12, 3);
  const Network back = deserialize(serialize(net));
  EXPECT_EQ(back.label_space(), LabelSpace::dual);
  EXPECT_EQ(back.class_names(), net.class_names());
  EXPECT_EQ(back.input_offset(), net.input_offset());
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Tensor x = random_tensor({3, 8, 8}, rng, 0, 1);
    EXPECT_EQ(net.forward(x), back.forward(x));
  }
  EXPECT_EQ(serialize(back), serialize(net));
}

TEST(Checkpoint, GlobalPoolRoundTrip) {
  std::mt19937_64 rng(17);
  Architecture arch{3, 8, {4, 4}, 6};
  arch.global_pool = true;
  const Network net = Network::build(arch, LabelSpace::plain, {"a", "b"}, rng);
  const Network back = deserialize(serialize(net));
  const Tensor x = random_tensor({3, 8, 8}, rng, 0, 1);
  EXPECT_EQ(net.forward(x), back.forward(x));
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "gdsal_test_net.ckpt";
  const Network net = tiny_net(LabelSpace::masked, 14);
  save_checkpoint(net, path);
  const Network back = load_checkpoint(path, LabelSpace::masked);
  const Tensor x({3, 8, 8}, 0.25);
  EXPECT_EQ(classify(net, x).probabilities, classify(back, x).probabilities);
  EXPECT_THROW(load_checkpoint(path, LabelSpace::plain), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), Error);
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto good = serialize(tiny_net(LabelSpace::dual, 15));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize(bad_magic), FormatError);

  auto bad_version = good;
  bad_version[8] = 9;
  EXPECT_THROW(deserialize(bad_version), FormatError);

  auto truncated = good;
  truncated.resize(good.size() - 10);
  try {
    deserialize(truncated);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(deserialize(trailing), FormatError);

  auto flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  try {
    deserialize(flipped);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }

  try {
    deserialize(good, LabelSpace::plain);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("label space"), std::string::npos);
  }
}
