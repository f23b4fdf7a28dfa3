#pragma once

#include <filesystem>

#include "json.hpp"

#include "gdsal/dataset.hpp"
#include "gdsal/models.hpp"
#include "gdsal/saliency.hpp"
#include "gdsal/segment.hpp"

namespace gdsal {

using Json = nlohmann::json;

// Snapshot form of each config. apply_json overlays only the keys present and
// throws ConfigError on unknown keys or wrong types.

Json to_json(const GenerationConfig& c);
Json to_json(const Architecture& c);
Json to_json(const TrainConfig& c);
Json to_json(const SaliencyConfig& c);
Json to_json(const SegmentationConfig& c);

void apply_json(GenerationConfig& c, const Json& j);
void apply_json(Architecture& c, const Json& j);
void apply_json(TrainConfig& c, const Json& j);
void apply_json(SaliencyConfig& c, const Json& j);
void apply_json(SegmentationConfig& c, const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; byte-stable for equal input.
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace gdsal
