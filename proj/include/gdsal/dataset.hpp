#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdsal/mask.hpp"
#include "gdsal/tensor.hpp"

namespace gdsal {

enum class Split { train, test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

/// Geometry and colour of the single painted object.
struct ObjectPlacement {
  std::string shape;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;  // every vertex / boundary point lies within radius
  double angle = 0.0;   // radians
  double color[3] = {0.0, 0.0, 0.0};
};

/// Pixels whose centres fall inside the placed shape.
BinaryMask rasterize_object(const ObjectPlacement& placement, std::size_t size);

/// Image (3, H, W) in [0, 1], its class and the exact object mask.
struct LabeledSample {
  std::string id;
  Tensor image;
  std::size_t label = 0;
  BinaryMask mask;
  Split split = Split::train;
  ObjectPlacement placement;  // only filled by the generator
};

/// Generator amplitudes. Background is a per-image base colour plus a
/// low-frequency wave and uniform noise; the object is one colour at least
/// kMinContrast away from the base, plus uniform noise.
inline constexpr double kBackgroundNoise = 0.15;
inline constexpr double kWaveAmplitude = 0.1;
inline constexpr double kObjectNoise = 0.05;
inline constexpr double kMinContrast = 0.4;

/// Shapes known to the generator, in default class order.
const std::vector<std::string>& known_shapes();

struct GenerationConfig {
  std::size_t num_classes = 3;
  std::size_t image_size = 64;
  std::size_t train_count = 1500;
  std::size_t test_count = 500;
  std::uint64_t seed = 7;
};

struct ManifestEntry {
  std::string image;  // relative to the manifest directory
  std::string mask;
  std::size_t label = 0;
  Split split = Split::train;
};

struct DatasetManifest {
  static constexpr const char* kVersion = "gdsal-dataset/1";
  std::string version = kVersion;
  std::vector<std::string> classes;
  std::vector<ManifestEntry> samples;
  std::uint64_t rng_seed = 0;
  std::size_t image_size = 0;
};

/// Generates every sample in memory. Sample k gets label k mod N and a
/// private RNG stream, so the corpus is a pure function of the config.
std::vector<LabeledSample> generate_samples(const GenerationConfig& config);

/// Generates the corpus and writes images, masks and manifest.json under
/// `out_dir`.
DatasetManifest generate(const GenerationConfig& config,
                         const std::filesystem::path& out_dir);

void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Manifest plus every sample loaded from disk.
struct Corpus {
  DatasetManifest manifest;
  std::vector<LabeledSample> samples;

  std::vector<const LabeledSample*> split(Split which) const;
};

Corpus load_corpus(const std::filesystem::path& manifest_path);

/// Replaces each object pixel with the per-channel mean of the background
/// pixels of the same image. Background pixels are left untouched.
Tensor make_masked(const Tensor& image, const BinaryMask& mask);
Tensor make_masked(const LabeledSample& sample);

/// Throws if the mask is empty, full, or has the wrong size for the image.
void validate_sample(const LabeledSample& sample, std::size_t num_classes);

}  // namespace gdsal
