#include "gdsal/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include <zlib.h>

#include "gdsal/errors.hpp"
#include "gdsal/rng.hpp"

namespace gdsal {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::cnn1: return "cnn1";
    case Variant::cnn2: return "cnn2";
    case Variant::cnn3: return "cnn3";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "cnn1") return Variant::cnn1;
  if (name == "cnn2") return Variant::cnn2;
  if (name == "cnn3") return Variant::cnn3;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

LabelSpace label_space_for(Variant v) {
  switch (v) {
    case Variant::cnn1: return LabelSpace::plain;
    case Variant::cnn2: return LabelSpace::masked;
    case Variant::cnn3: return LabelSpace::dual;
  }
  return LabelSpace::plain;
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw ConfigError("epochs must be positive");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
}

std::vector<TrainingExample> training_examples(
    const std::vector<const LabeledSample*>& samples, Variant variant,
    std::size_t num_classes) {
  std::vector<TrainingExample> out;
  out.reserve(variant == Variant::cnn3 ? 2 * samples.size() : samples.size());
  for (const LabeledSample* s : samples) {
    if (s->label >= num_classes) {
      throw ConfigError(s->id + ": label " + std::to_string(s->label) +
                        " out of range");
    }
    switch (variant) {
      case Variant::cnn1:
        out.push_back({s->image, s->label});
        break;
      case Variant::cnn2:
        out.push_back({make_masked(*s), s->label});
        break;
      case Variant::cnn3:
        out.push_back({s->image, s->label});
        out.push_back({make_masked(*s), num_classes + s->label});
        break;
    }
  }
  return out;
}

double cross_entropy_from_logits(const Tensor& logits, std::size_t target) {
  const auto z = logits.data();
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - peak);
  return -(z[target] - peak - std::log(total));
}

void sgd_step(Network& net, std::vector<std::vector<double>>& velocity,
              double learning_rate, double momentum, double grad_scale) {
  auto params = net.parameters();
  if (velocity.size() != params.size()) {
    velocity.clear();
    for (const Tensor* p : params) velocity.emplace_back(p->size(), 0.0);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.data();
    auto& v = velocity[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum * v[i] - learning_rate * grad_scale * g[i];
      w[i] += v[i];
    }
  }
}

TrainResult train(Network& net, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (train_set.empty()) throw ConfigError("training split is empty");
  for (const auto& ex : train_set) {
    if (ex.target >= net.output_size()) {
      throw ConfigError("target node " + std::to_string(ex.target) +
                        " out of range for " +
                        std::to_string(net.output_size()) + " outputs");
    }
  }
  TrainResult result;
  result.examples_per_epoch = train_set.size();
  auto rng = make_rng(cfg.seed, "train");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> velocity;
  ForwardTrace trace;
  Tensor logit_grad({net.output_size()});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      net.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const TrainingExample& ex = train_set[order[b]];
        const Tensor probs = net.forward(ex.image, trace);
        loss_sum += cross_entropy_from_logits(trace.logits(), ex.target);
        // d(-ln y_t)/dz = y - onehot(t)
        for (std::size_t i = 0; i < probs.size(); ++i) {
          logit_grad[i] = probs[i] - (i == ex.target ? 1.0 : 0.0);
        }
        net.accumulate_logit_gradient(trace, logit_grad);
      }
      sgd_step(net, velocity, cfg.learning_rate, cfg.momentum,
               1.0 / static_cast<double>(end - start));
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_sum / static_cast<double>(order.size());
    m.test_accuracy = test_set.empty() ? 0.0 : accuracy(net, test_set);
    result.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  for (Tensor* p : net.parameters()) p->drop_grad();
  return result;
}

TrainResult train(Network& net, const Corpus& corpus, Variant variant,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (net.label_space() != label_space_for(variant)) {
    throw ConfigError(std::string(variant_name(variant)) +
                      " requires label space " +
                      std::string(label_space_name(label_space_for(variant))) +
                      ", network has " +
                      std::string(label_space_name(net.label_space())));
  }
  const std::size_t n = corpus.manifest.classes.size();
  if (net.num_classes() != n) {
    throw ConfigError("network class count differs from the corpus");
  }
  const auto train_samples = corpus.split(Split::train);
  if (train_samples.empty()) throw ConfigError("training split is empty");
  return train(net, training_examples(train_samples, variant, n),
               training_examples(corpus.split(Split::test), variant, n), cfg,
               on_epoch);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Classification classify(const Network& net, const Tensor& image) {
  Classification c;
  c.probabilities = net.forward(image);
  c.label = argmax(c.probabilities.data());
  return c;
}

double accuracy(const Network& net, const std::vector<TrainingExample>& set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : set) {
    if (classify(net, ex.image).label == ex.target) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// magic "GDSALNET" | u32 version | u64 total file length | u8 label_space | u32 n_classes
// | n x (u32 len, bytes) | u32 rank, rank x u32 input dims | f64 input offset
// | u32 n_layers
// | per layer: u8 kind, kind-specific u32 hyperparameters
// | every parameter tensor as raw f64 in layer order | u32 CRC-32 of all
// preceding bytes. All integers and floats little-endian.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'D', 'S', 'A', 'L', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void size(std::size_t v) { u32(static_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

void read_params(Reader& r, Tensor& t) {
  for (double& v : t.data()) v = r.f64();
}

}  // namespace

std::vector<std::uint8_t> serialize(const Network& net) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  const std::size_t length_at = w.bytes().size();
  w.u64(0);
  w.u8(static_cast<std::uint8_t>(net.label_space()));
  w.size(net.class_names().size());
  for (const auto& name : net.class_names()) {
    w.size(name.size());
    w.raw(name.data(), name.size());
  }
  w.size(net.input_shape().size());
  for (std::size_t d : net.input_shape()) w.size(d);
  w.f64(net.input_offset());
  w.size(net.layers().size());
  for (const Layer& layer : net.layers()) {
    w.u8(static_cast<std::uint8_t>(kind_of(layer)));
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
      w.size(c->in_channels);
      w.size(c->out_channels);
      w.size(c->kernel);
      w.size(c->stride);
      w.size(c->padding);
    } else if (const auto* p = std::get_if<MaxPool2d>(&layer)) {
      w.size(p->kernel);
      w.size(p->stride);
    } else if (const auto* a = std::get_if<Affine>(&layer)) {
      w.size(a->fan_in);
      w.size(a->fan_out);
    }
  }
  for (const Tensor* p : net.parameters()) {
    for (double v : p->data()) w.f64(v);
  }
  const std::uint64_t total = w.bytes().size() + 4;
  for (int i = 0; i < 8; ++i) {
    w.bytes()[length_at + i] = static_cast<std::uint8_t>(total >> (8 * i));
  }
  w.u32(crc_of(w.bytes()));
  return std::move(w.bytes());
}

Network deserialize(std::span<const std::uint8_t> bytes,
                    std::optional<LabelSpace> expected) {
  if (bytes.size() < sizeof kMagic ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a gdsal checkpoint (bad magic)");
  }
  Reader r(bytes);
  r.str(sizeof kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(kVersion) + ")");
  }
  const std::uint64_t total = r.u64();
  if (bytes.size() < total) throw FormatError("checkpoint truncated");
  if (bytes.size() > total) throw FormatError("checkpoint has trailing bytes");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc_of(body) != tail.u32()) throw FormatError("checkpoint checksum mismatch");

  const std::uint8_t space_raw = r.u8();
  if (space_raw > 2) throw FormatError("checkpoint has unknown label space");
  const auto space = static_cast<LabelSpace>(space_raw);
  if (expected && *expected != space) {
    throw FormatError("checkpoint label space " +
                      std::string(label_space_name(space)) + " does not match expected " +
                      std::string(label_space_name(*expected)));
  }
  std::vector<std::string> names(r.u32());
  for (auto& n : names) n = r.str(r.u32());
  Shape input(r.u32());
  for (auto& d : input) d = r.u32();
  const double offset = r.f64();
  std::vector<Layer> layers(r.u32());
  for (Layer& layer : layers) {
    const std::uint8_t kind = r.u8();
    switch (static_cast<LayerKind>(kind)) {
      case LayerKind::conv2d: {
        Conv2d c;
        c.in_channels = r.u32();
        c.out_channels = r.u32();
        c.kernel = r.u32();
        c.stride = r.u32();
        c.padding = r.u32();
        c.weight = Tensor({c.out_channels, c.in_channels, c.kernel, c.kernel});
        c.bias = Tensor({c.out_channels});
        layer = std::move(c);
        break;
      }
      case LayerKind::maxpool2d: {
        MaxPool2d p;
        p.kernel = r.u32();
        p.stride = r.u32();
        layer = p;
        break;
      }
      case LayerKind::relu: layer = Relu{}; break;
      case LayerKind::flatten: layer = Flatten{}; break;
      case LayerKind::affine: {
        Affine a;
        a.fan_in = r.u32();
        a.fan_out = r.u32();
        a.weight = Tensor({a.fan_out, a.fan_in});
        a.bias = Tensor({a.fan_out});
        layer = std::move(a);
        break;
      }
      case LayerKind::softmax: layer = Softmax{}; break;
      default:
        throw FormatError("checkpoint has unknown layer kind " + std::to_string(kind));
    }
  }
  for (Layer& layer : layers) {
    for (Tensor* p : parameters(layer)) read_params(r, *p);
  }
  r.u32();  // crc, already verified
  if (!r.at_end()) throw FormatError("checkpoint has trailing bytes");
  try {
    return Network(std::move(layers), space, std::move(names), std::move(input), offset);
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint describes an invalid network: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Network load_checkpoint(const std::filesystem::path& path,
                        std::optional<LabelSpace> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes, expected);
}

}  // namespace gdsal
