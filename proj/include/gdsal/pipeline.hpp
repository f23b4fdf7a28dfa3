#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gdsal/dataset.hpp"
#include "gdsal/eval.hpp"
#include "gdsal/models.hpp"
#include "gdsal/saliency.hpp"
#include "gdsal/segment.hpp"

// File-level pipeline stages shared by the command-line tool and the
// acceptance checks. Every stage reads its inputs from disk and writes into
// its own directory, including a config.json snapshot of its settings.

namespace gdsal {

namespace fs = std::filesystem;

using LogFn = std::function<void(const std::string&)>;

// -- training ---------------------------------------------------------------

fs::path checkpoint_path(const fs::path& models_dir, Variant v);
fs::path metrics_path(const fs::path& models_dir, Variant v);

struct TrainSummary {
  Variant variant = Variant::cnn1;
  TrainResult result;
  double test_accuracy = 0.0;  // after the final epoch
};

/// Trains each variant from a fresh initialisation (stream "init", index =
/// variant) and writes checkpoint plus metrics CSV per variant.
std::vector<TrainSummary> run_train_stage(const fs::path& manifest_path,
                                          const std::vector<Variant>& variants,
                                          const Architecture& arch,
                                          const TrainConfig& cfg,
                                          const fs::path& models_dir,
                                          const LogFn& log = {});

// -- saliency ---------------------------------------------------------------

/// Which network(s) a map comes from. cnn23 averages the cnn2 and cnn3 maps.
enum class MapSource { cnn1, cnn2, cnn3, cnn23 };
std::string_view map_source_name(MapSource s);
MapSource parse_map_source(std::string_view s);

struct MapRequest {
  MapSource source = MapSource::cnn23;
  bool smooth = false;
  /// Directory name, e.g. "cnn23_smooth".
  std::string name() const;
};

/// Checkpoints needed for a set of requests; cnn1 is always loaded because it
/// supplies the class label.
struct ModelSet {
  std::optional<Network> cnn1, cnn2, cnn3;
  const Network& get(Variant v) const;
};
ModelSet load_models(const fs::path& models_dir,
                     const std::vector<MapRequest>& requests);

struct ImageSaliency {
  std::size_t label = 0;  // recognised by cnn1
  std::optional<GdResult> gd[3];
  std::optional<SaliencyMap> unit[3];  // postprocessed per network
  std::vector<SaliencyMap> maps;       // one per request
};

/// Algorithm 1 for one image: classify with cnn1, run GD on each needed
/// network, postprocess, combine for cnn23 and optionally smooth.
ImageSaliency extract_saliency(const ModelSet& models, const Tensor& image,
                               const std::vector<MapRequest>& requests,
                               const SaliencyConfig& cfg);

struct SaliencyStageConfig {
  std::vector<MapRequest> requests{{MapSource::cnn23, true}};
  SaliencyConfig saliency;
  Split split = Split::test;
  std::size_t limit = 0;  // 0 = every image of the split
  std::size_t jobs = 1;
};

/// Writes <out>/<request name>/<id>.png (max-rescaled 8-bit) and <id>.json.
void run_saliency_stage(const fs::path& manifest_path, const fs::path& models_dir,
                        const SaliencyStageConfig& cfg, const fs::path& out_dir,
                        const LogFn& log = {});

/// Single image, outside any manifest.
void run_saliency_image(const fs::path& image_path, const fs::path& models_dir,
                        const SaliencyStageConfig& cfg, const fs::path& out_dir);

/// Saliency PNG back to a map in [0, 1]; state `smoothed`.
SaliencyMap read_map_png(const fs::path& path);

// -- segmentation -----------------------------------------------------------

enum class SegmentStatus { ok, no_salient_pixels, no_proposals };
std::string_view segment_status_name(SegmentStatus s);

struct SegmentOutcome {
  std::string id;
  SegmentStatus status = SegmentStatus::ok;
  SaliencyMap refined;
  std::optional<Selection> selection;
  std::size_t proposals = 0;
};

SegmentOutcome segment_image(const std::string& id, const Tensor& image,
                             const SaliencyMap& map, const SegmentationConfig& cfg);

struct SegmentStageConfig {
  SegmentationConfig segmentation;
  Split split = Split::test;
  std::size_t jobs = 1;
};

/// For each <id>.png in maps_dir belonging to the split writes
/// <id>_refined.png, <id>_mask.png and <id>.json. Returns the outcomes.
std::vector<SegmentOutcome> run_segment_stage(const fs::path& manifest_path,
                                              const fs::path& maps_dir,
                                              const SegmentStageConfig& cfg,
                                              const fs::path& out_dir,
                                              const LogFn& log = {});

// -- evaluation -------------------------------------------------------------

struct EvalInput {
  std::string name;
  fs::path maps_dir;                     // <id>.png saliency maps
  std::optional<fs::path> segments_dir;  // <id>_mask.png binary masks
};

struct EvalStageConfig {
  std::vector<EvalInput> inputs;
  bool gaussian_baseline = true;
  double beta2 = kDefaultBeta2;
  Split split = Split::test;
};

/// Per method: <out>/<name>/per_image.csv, curves/<id>.csv, mean_curve.csv.
/// Across methods: comparison.csv, pr.svg, fbeta.svg, summary.json.
std::vector<EvalReport> run_eval_stage(const fs::path& manifest_path,
                                       const EvalStageConfig& cfg,
                                       const fs::path& out_dir,
                                       const LogFn& log = {});

// -- reproduce --------------------------------------------------------------

struct ReproduceConfig {
  GenerationConfig dataset;
  Architecture arch;
  TrainConfig train;
  SaliencyConfig saliency;
  SegmentationConfig segmentation;
  std::size_t jobs = 1;
};

/// Settings used by `reproduce` for a root seed.
ReproduceConfig default_reproduce_config(std::uint64_t seed = 7);

struct ReproduceSummary {
  double cnn1_accuracy = 0.0;
  double cnn2_accuracy = 0.0;
  double cnn3_accuracy = 0.0;
  double f_cnn23 = 0.0;       // smoothed CNN2+CNN3, mean max F
  double f_cnn1 = 0.0;        // smoothed CNN1, mean max F
  double f_gaussian = 0.0;    // centred Gaussian baseline, mean max F
  double f_segmentation = 0.0;
  std::size_t test_images = 0;
};

/// dataset -> train -> saliency -> segment -> eval under `out_dir`, then
/// summary.csv / summary.json / summary.md.
ReproduceSummary run_reproduce(const ReproduceConfig& cfg, const fs::path& out_dir,
                               const LogFn& log = {});

/// Runs fn(i) for i in [0, n) on `jobs` threads (inline when jobs <= 1).
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace gdsal
