#include "gdsal/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "json.hpp"

#include "gdsal/errors.hpp"
#include "gdsal/image_io.hpp"
#include "gdsal/rng.hpp"

namespace gdsal {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kMinImageSize = 16;

bool inside_triangle(double px, double py, const std::array<double, 6>& v) {
  auto edge = [&](int a, int b) {
    return (v[2 * b] - v[2 * a]) * (py - v[2 * a + 1]) -
           (v[2 * b + 1] - v[2 * a + 1]) * (px - v[2 * a]);
  };
  const double d0 = edge(0, 1), d1 = edge(1, 2), d2 = edge(2, 0);
  const bool has_neg = d0 < 0 || d1 < 0 || d2 < 0;
  const bool has_pos = d0 > 0 || d1 > 0 || d2 > 0;
  return !(has_neg && has_pos);
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const double m = v - c;
  for (double& ch : rgb) ch += m;
  return rgb;
}

LabeledSample make_sample(const GenerationConfig& config,
                          const std::vector<std::string>& classes,
                          std::size_t global_index, std::size_t label,
                          Split split, std::size_t split_index) {
  const std::size_t size = config.image_size;
  auto rng = make_rng(config.seed, "dataset", global_index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::array<double, 3> base{};
  for (double& b : base) b = 0.05 + 0.35 * unit(rng);

  ObjectPlacement place;
  place.shape = classes[label];
  const double s = static_cast<double>(size);
  place.radius = s * (0.16 + 0.14 * unit(rng));
  const double lo = place.radius + 1.0, hi = s - place.radius - 1.0;
  place.cx = lo + (hi - lo) * unit(rng);
  place.cy = lo + (hi - lo) * unit(rng);
  place.angle = 2.0 * std::numbers::pi * unit(rng);
  std::array<double, 3> color{};
  for (int attempt = 0; attempt < 100; ++attempt) {
    color = hsv_to_rgb(unit(rng), 0.3 + 0.6 * unit(rng), 0.8 + 0.2 * unit(rng));
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) d2 += (color[c] - base[c]) * (color[c] - base[c]);
    if (std::sqrt(d2) >= kMinContrast) break;
  }
  std::copy(color.begin(), color.end(), place.color);

  LabeledSample sample;
  char id[32];
  std::snprintf(id, sizeof id, "%s_%05zu", split == Split::train ? "train" : "test",
                split_index);
  sample.id = id;
  sample.label = label;
  sample.split = split;
  sample.mask = rasterize_object(place, size);
  sample.placement = place;

  // Low-frequency wave plus per-pixel noise for the background.
  const double fx = 0.05 + 0.25 * unit(rng), fy = 0.05 + 0.25 * unit(rng);
  std::array<double, 3> phase{};
  for (double& p : phase) p = 2.0 * std::numbers::pi * unit(rng);
  std::uniform_real_distribution<double> bg_noise(-kBackgroundNoise, kBackgroundNoise);
  std::uniform_real_distribution<double> obj_noise(-kObjectNoise, kObjectNoise);

  sample.image = Tensor({3, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const bool object = sample.mask(y, x);
      for (std::size_t c = 0; c < 3; ++c) {
        double v;
        if (object) {
          v = color[c] + obj_noise(rng);
        } else {
          v = base[c] + kWaveAmplitude * std::sin(fx * x + fy * y + phase[c]) +
              bg_noise(rng);
        }
        // Quantise so the in-memory image equals its 8-bit PNG.
        sample.image.at(c, y, x) = to_u8(v) / 255.0;
      }
    }
  }
  return sample;
}

std::string rel(const fs::path& p) { return p.generic_string(); }

}  // namespace

std::string_view split_name(Split split) {
  return split == Split::train ? "train" : "test";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw FormatError("unknown split '" + std::string(name) + "'");
}

const std::vector<std::string>& known_shapes() {
  static const std::vector<std::string> shapes{"disk", "triangle", "bar",
                                               "square", "cross"};
  return shapes;
}

BinaryMask rasterize_object(const ObjectPlacement& p, std::size_t size) {
  BinaryMask mask(size, size);
  const double ca = std::cos(p.angle), sa = std::sin(p.angle);
  const double r = p.radius;
  std::array<double, 6> tri{};
  for (int k = 0; k < 3; ++k) {
    const double a = p.angle + k * 2.0 * std::numbers::pi / 3.0;
    tri[2 * k] = p.cx + r * std::cos(a);
    tri[2 * k + 1] = p.cy + r * std::sin(a);
  }
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double dx = px - p.cx, dy = py - p.cy;
      const double u = dx * ca + dy * sa;
      const double v = -dx * sa + dy * ca;
      bool in = false;
      if (p.shape == "disk") {
        in = dx * dx + dy * dy <= r * r;
      } else if (p.shape == "triangle") {
        in = inside_triangle(px, py, tri);
      } else if (p.shape == "bar") {
        in = std::abs(u) <= 0.92 * r && std::abs(v) <= 0.38 * r;
      } else if (p.shape == "square") {
        in = std::abs(u) <= r / std::numbers::sqrt2 &&
             std::abs(v) <= r / std::numbers::sqrt2;
      } else if (p.shape == "cross") {
        in = (std::abs(u) <= 0.92 * r && std::abs(v) <= 0.3 * r) ||
             (std::abs(v) <= 0.92 * r && std::abs(u) <= 0.3 * r);
      } else {
        throw ConfigError("unknown shape '" + p.shape + "'");
      }
      mask.at(y, x) = in ? 1 : 0;
    }
  }
  return mask;
}

std::vector<LabeledSample> generate_samples(const GenerationConfig& config) {
  const auto& shapes = known_shapes();
  if (config.num_classes < 2 || config.num_classes > shapes.size()) {
    throw ConfigError("number of classes must be in [2, " +
                      std::to_string(shapes.size()) + "]");
  }
  if (config.image_size < kMinImageSize) {
    throw ConfigError("image size " + std::to_string(config.image_size) +
                      " too small to place a shape (minimum " +
                      std::to_string(kMinImageSize) + ")");
  }
  const std::vector<std::string> classes(shapes.begin(),
                                         shapes.begin() + config.num_classes);
  std::vector<LabeledSample> samples;
  samples.reserve(config.train_count + config.test_count);
  std::size_t global = 0;
  for (Split split : {Split::train, Split::test}) {
    const std::size_t count =
        split == Split::train ? config.train_count : config.test_count;
    for (std::size_t i = 0; i < count; ++i, ++global) {
      samples.push_back(make_sample(config, classes, global,
                                    i % config.num_classes, split, i));
      validate_sample(samples.back(), config.num_classes);
    }
  }
  return samples;
}

DatasetManifest generate(const GenerationConfig& config,
                         const fs::path& out_dir) {
  // A written corpus feeds training and evaluation, so both splits must exist.
  if (config.train_count == 0 || config.test_count == 0) {
    throw ConfigError("train and test counts must both be positive");
  }
  const auto samples = generate_samples(config);
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");
  DatasetManifest manifest;
  manifest.classes.assign(known_shapes().begin(),
                          known_shapes().begin() + config.num_classes);
  manifest.rng_seed = config.seed;
  manifest.image_size = config.image_size;
  for (const LabeledSample& s : samples) {
    ManifestEntry e;
    e.image = rel(fs::path("images") / (s.id + ".png"));
    e.mask = rel(fs::path("masks") / (s.id + ".png"));
    e.label = s.label;
    e.split = s.split;
    write_png(out_dir / e.image, tensor_to_rgb8(s.image));
    write_mask_png(out_dir / e.mask, s.mask);
    manifest.samples.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["classes"] = manifest.classes;
  j["rng_seed"] = manifest.rng_seed;
  j["image_size"] = manifest.image_size;
  json entries = json::array();
  for (const ManifestEntry& e : manifest.samples) {
    entries.push_back({{"image", e.image},
                       {"mask", e.mask},
                       {"label", e.label},
                       {"split", split_name(e.split)}});
  }
  j["samples"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read manifest " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.version = j.at("version").get<std::string>();
    if (m.version != DatasetManifest::kVersion) {
      throw FormatError("unsupported manifest version '" + m.version + "'");
    }
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.image_size = j.value("image_size", std::size_t{0});
    for (const json& e : j.at("samples")) {
      ManifestEntry entry;
      entry.image = e.at("image").get<std::string>();
      entry.mask = e.at("mask").get<std::string>();
      entry.label = e.at("label").get<std::size_t>();
      entry.split = parse_split(e.at("split").get<std::string>());
      if (entry.label >= m.classes.size()) {
        throw FormatError("manifest label " + std::to_string(entry.label) +
                          " out of range for " +
                          std::to_string(m.classes.size()) + " classes");
      }
      m.samples.push_back(std::move(entry));
    }
  } catch (const json::exception& ex) {
    throw FormatError("malformed manifest " + path.string() + ": " + ex.what());
  }
  return m;
}

std::vector<const LabeledSample*> Corpus::split(Split which) const {
  std::vector<const LabeledSample*> out;
  for (const LabeledSample& s : samples) {
    if (s.split == which) out.push_back(&s);
  }
  return out;
}

Corpus load_corpus(const fs::path& manifest_path) {
  Corpus corpus;
  corpus.manifest = read_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  for (const ManifestEntry& e : corpus.manifest.samples) {
    LabeledSample s;
    s.id = fs::path(e.image).stem().string();
    s.image = rgb8_to_tensor(read_png(root / e.image));
    s.mask = read_mask_png(root / e.mask);
    s.label = e.label;
    s.split = e.split;
    validate_sample(s, corpus.manifest.classes.size());
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

void validate_sample(const LabeledSample& sample, std::size_t num_classes) {
  if (sample.label >= num_classes) {
    throw FormatError(sample.id + ": label out of range");
  }
  if (sample.image.rank() != 3 || sample.mask.height != sample.image.dim(1) ||
      sample.mask.width != sample.image.dim(2)) {
    throw ShapeError(sample.id + ": mask and image dimensions differ");
  }
  const std::size_t n = sample.mask.count();
  if (n == 0 || n == sample.mask.size()) {
    throw FormatError(sample.id + ": object mask must be neither empty nor full");
  }
}

Tensor make_masked(const Tensor& image, const BinaryMask& mask) {
  if (image.rank() != 3 || mask.height != image.dim(1) ||
      mask.width != image.dim(2)) {
    throw ShapeError("make_masked: mask " + std::to_string(mask.height) + "x" +
                     std::to_string(mask.width) + " vs image " +
                     shape_to_string(image.shape()));
  }
  const std::size_t n_obj = mask.count();
  if (n_obj == 0 || n_obj == mask.size()) {
    throw FormatError("make_masked: mask must be neither empty nor full");
  }
  const std::size_t channels = image.dim(0);
  const std::size_t plane = mask.size();
  Tensor out = image;
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      if (!mask.values[i]) sum += image[c * plane + i];
    }
    const double mean = sum / static_cast<double>(plane - n_obj);
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask.values[i]) out[c * plane + i] = mean;
    }
  }
  return out;
}

Tensor make_masked(const LabeledSample& sample) {
  return make_masked(sample.image, sample.mask);
}

}  // namespace gdsal
