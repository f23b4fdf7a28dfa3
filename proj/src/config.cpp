#include "gdsal/config.hpp"

#include <charconv>
#include <fstream>

#include "gdsal/errors.hpp"

namespace gdsal {
namespace {

template <class T>
void take(const Json& v, const std::string& key, T& out) {
  try {
    out = v.get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::string take_string(const Json& v, const std::string& key) {
  std::string s;
  take(v, key, s);
  return s;
}

[[noreturn]] void unknown(const std::string& section, const std::string& key) {
  throw ConfigError("unknown " + section + " config key '" + key + "'");
}

void require_object(const Json& j, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " config must be a JSON object");
}

}  // namespace

Json to_json(const GenerationConfig& c) {
  return {{"num_classes", c.num_classes},
          {"image_size", c.image_size},
          {"train_count", c.train_count},
          {"test_count", c.test_count},
          {"seed", c.seed}};
}

Json to_json(const Architecture& c) {
  return {{"input_channels", c.input_channels},
          {"input_size", c.input_size},
          {"conv_channels", c.conv_channels},
          {"hidden", c.hidden},
          {"input_offset", c.input_offset},
          {"global_pool", c.global_pool}};
}

Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"seed", c.seed},
          {"shuffle", c.shuffle}};
}

Json to_json(const SaliencyConfig& c) {
  return {{"iterations", c.iterations},
          {"step_policy", step_policy_name(c.step_policy)},
          {"step", c.step},
          {"threshold_policy", threshold_policy_name(c.threshold_policy)},
          {"threshold", c.threshold},
          {"norm", norm_name(c.norm)},
          {"smoothing_size", c.smoothing_size},
          {"clamp", c.clamp}};
}

Json to_json(const SegmentationConfig& c) {
  return {{"delta", c.delta},
          {"salient_fraction", c.salient_fraction},
          {"seeds_per_run", c.seeds_per_run},
          {"runs", c.runs},
          {"proposal_budget", c.proposal_budget},
          {"growth_tolerance", c.growth_tolerance},
          {"seed", c.seed}};
}

void apply_json(GenerationConfig& c, const Json& j) {
  require_object(j, "dataset");
  for (const auto& [k, v] : j.items()) {
    if (k == "num_classes") take(v, k, c.num_classes);
    else if (k == "image_size") take(v, k, c.image_size);
    else if (k == "train_count") take(v, k, c.train_count);
    else if (k == "test_count") take(v, k, c.test_count);
    else if (k == "seed") take(v, k, c.seed);
    else unknown("dataset", k);
  }
}

void apply_json(Architecture& c, const Json& j) {
  require_object(j, "architecture");
  for (const auto& [k, v] : j.items()) {
    if (k == "input_channels") take(v, k, c.input_channels);
    else if (k == "input_size") take(v, k, c.input_size);
    else if (k == "conv_channels") take(v, k, c.conv_channels);
    else if (k == "hidden") take(v, k, c.hidden);
    else if (k == "input_offset") take(v, k, c.input_offset);
    else if (k == "global_pool") take(v, k, c.global_pool);
    else unknown("architecture", k);
  }
}

void apply_json(TrainConfig& c, const Json& j) {
  require_object(j, "train");
  for (const auto& [k, v] : j.items()) {
    if (k == "epochs") take(v, k, c.epochs);
    else if (k == "batch_size") take(v, k, c.batch_size);
    else if (k == "learning_rate") take(v, k, c.learning_rate);
    else if (k == "momentum") take(v, k, c.momentum);
    else if (k == "seed") take(v, k, c.seed);
    else if (k == "shuffle") take(v, k, c.shuffle);
    else unknown("train", k);
  }
}

void apply_json(SaliencyConfig& c, const Json& j) {
  require_object(j, "saliency");
  for (const auto& [k, v] : j.items()) {
    if (k == "iterations") take(v, k, c.iterations);
    else if (k == "step_policy") c.step_policy = parse_step_policy(take_string(v, k));
    else if (k == "step") take(v, k, c.step);
    else if (k == "threshold_policy") c.threshold_policy = parse_threshold_policy(take_string(v, k));
    else if (k == "threshold") take(v, k, c.threshold);
    else if (k == "norm") c.norm = parse_norm(take_string(v, k));
    else if (k == "smoothing_size") take(v, k, c.smoothing_size);
    else if (k == "clamp") take(v, k, c.clamp);
    else unknown("saliency", k);
  }
}

void apply_json(SegmentationConfig& c, const Json& j) {
  require_object(j, "segment");
  for (const auto& [k, v] : j.items()) {
    if (k == "delta") take(v, k, c.delta);
    else if (k == "salient_fraction") take(v, k, c.salient_fraction);
    else if (k == "seeds_per_run") take(v, k, c.seeds_per_run);
    else if (k == "runs") take(v, k, c.runs);
    else if (k == "proposal_budget") take(v, k, c.proposal_budget);
    else if (k == "growth_tolerance") take(v, k, c.growth_tolerance);
    else if (k == "seed") take(v, k, c.seed);
    else unknown("segment", k);
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace gdsal
