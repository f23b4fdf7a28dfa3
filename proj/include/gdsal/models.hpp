#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "gdsal/dataset.hpp"
#include "gdsal/network.hpp"

namespace gdsal {

/// The three classifier training schemes.
///   cnn1 - original images, plain label space.
///   cnn2 - masked images only, masked label space.
///   cnn3 - original and masked images, dual label space.
enum class Variant { cnn1, cnn2, cnn3 };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
LabelSpace label_space_for(Variant v);

struct TrainConfig {
  std::size_t epochs = 8;
  std::size_t batch_size = 8;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 7;
  bool shuffle = true;
};

void validate(const TrainConfig& cfg);

struct TrainingExample {
  Tensor image;
  std::size_t target = 0;
};

/// Expands samples into the (input, target node) pairs a variant trains on.
/// cnn3 emits two examples per sample: original -> l, masked -> N + l.
std::vector<TrainingExample> training_examples(
    const std::vector<const LabeledSample*>& samples, Variant variant,
    std::size_t num_classes);

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;           // mean training cross-entropy over the epoch
  double test_accuracy = 0.0;  // on the variant's test examples
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::size_t examples_per_epoch = 0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Minibatch SGD with momentum on softmax cross-entropy. Deterministic for a
/// fixed config.
TrainResult train(Network& net, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Trains `variant` on the corpus train split and evaluates on its test split.
TrainResult train(Network& net, const Corpus& corpus, Variant variant,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// -ln p[target], computed from logits via log-sum-exp.
double cross_entropy_from_logits(const Tensor& logits, std::size_t target);

/// Applies one SGD-with-momentum step. `velocity` holds one buffer per
/// parameter and is resized on first use.
void sgd_step(Network& net, std::vector<std::vector<double>>& velocity,
              double learning_rate, double momentum, double grad_scale);

struct Classification {
  std::size_t label = 0;
  Tensor probabilities;
};

/// argmax of the softmax output, ties to the lowest index.
Classification classify(const Network& net, const Tensor& image);
std::size_t argmax(std::span<const double> values);

double accuracy(const Network& net, const std::vector<TrainingExample>& set);

/// Versioned little-endian checkpoint with a trailing CRC-32.
void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path,
                        std::optional<LabelSpace> expected = std::nullopt);

std::vector<std::uint8_t> serialize(const Network& net);
Network deserialize(std::span<const std::uint8_t> bytes,
                    std::optional<LabelSpace> expected = std::nullopt);

}  // namespace gdsal
