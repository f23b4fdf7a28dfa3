#include "gdsal/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "gdsal/config.hpp"
#include "gdsal/errors.hpp"
#include "gdsal/image_io.hpp"
#include "gdsal/report.hpp"
#include "gdsal/rng.hpp"

namespace gdsal {
namespace {

// Input paths in a stage config are stored relative to the stage's output
// dir, so reruns into another directory write identical files.
std::string path_from(const fs::path& dir, const fs::path& p) {
  return fs::absolute(p).lexically_normal().lexically_relative(
      fs::absolute(dir).lexically_normal()).generic_string();
}

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::size_t index_of(Variant v) { return static_cast<std::size_t>(v); }

std::vector<const LabeledSample*> pick(const Corpus& corpus, Split split,
                                       std::size_t limit) {
  auto samples = corpus.split(split);
  if (limit > 0 && samples.size() > limit) samples.resize(limit);
  return samples;
}

void write_gray_png(const fs::path& path, const std::vector<std::uint8_t>& q,
                    std::size_t height, std::size_t width) {
  Image8 img{width, height, 1, q};
  write_png(path, img);
}

void write_unit_png(const fs::path& path, const SaliencyMap& m) {
  std::vector<std::uint8_t> q(m.values.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = to_u8(m.values[i]);
  write_gray_png(path, q, m.height, m.width);
}

Json gd_json(Variant v, const GdResult& gd, const SaliencyMap& unit) {
  return {{"variant", variant_name(v)},
          {"initial_cost", gd.initial_cost},
          {"cost_trace", gd.cost_trace},
          {"step_sizes", gd.step_sizes},
          {"theta", unit.threshold},
          {"degenerate_after_pruning", unit.degenerate}};
}

std::vector<Variant> networks_for(MapSource s) {
  switch (s) {
    case MapSource::cnn1: return {Variant::cnn1};
    case MapSource::cnn2: return {Variant::cnn2};
    case MapSource::cnn3: return {Variant::cnn3};
    case MapSource::cnn23: return {Variant::cnn2, Variant::cnn3};
  }
  return {};
}

Json sidecar(const std::string& id, const MapRequest& req, const ImageSaliency& s,
             const SaliencyMap& map, const SaliencyConfig& cfg,
             const std::vector<std::string>& classes) {
  Json nets = Json::array();
  for (Variant v : networks_for(req.source)) {
    const std::size_t k = index_of(v);
    nets.push_back(gd_json(v, *s.gd[k], *s.unit[k]));
  }
  return {{"id", id},
          {"model", map_source_name(req.source)},
          {"smooth", req.smooth},
          {"label", s.label},
          {"class", s.label < classes.size() ? classes[s.label] : ""},
          {"state", map_state_name(map.state)},
          {"provenance", map.provenance},
          {"degenerate", map.degenerate},
          {"iterations", cfg.iterations},
          {"step_policy", step_policy_name(cfg.step_policy)},
          {"step", cfg.step},
          {"threshold_policy", threshold_policy_name(cfg.threshold_policy)},
          {"norm", norm_name(cfg.norm)},
          {"networks", nets}};
}

void write_saliency_outputs(const std::string& id, const ImageSaliency& s,
                            const SaliencyStageConfig& cfg,
                            const std::vector<std::string>& classes,
                            const fs::path& out_dir) {
  for (std::size_t r = 0; r < cfg.requests.size(); ++r) {
    const fs::path dir = out_dir / cfg.requests[r].name();
    const SaliencyMap& map = s.maps[r];
    write_gray_png(dir / (id + ".png"), quantize(map), map.height, map.width);
    write_json_file(dir / (id + ".json"),
                    sidecar(id, cfg.requests[r], s, map, cfg.saliency, classes));
  }
}

Json stage_snapshot(const SaliencyStageConfig& cfg, const MapRequest& req) {
  return {{"stage", "saliency"},
          {"model", map_source_name(req.source)},
          {"smooth", req.smooth},
          {"split", split_name(cfg.split)},
          {"limit", cfg.limit},
          {"saliency", to_json(cfg.saliency)}};
}

}  // namespace

void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

fs::path checkpoint_path(const fs::path& dir, Variant v) {
  return dir / (std::string(variant_name(v)) + ".ckpt");
}

fs::path metrics_path(const fs::path& dir, Variant v) {
  return dir / (std::string(variant_name(v)) + "_metrics.csv");
}

std::vector<TrainSummary> run_train_stage(const fs::path& manifest_path,
                                          const std::vector<Variant>& variants,
                                          const Architecture& arch,
                                          const TrainConfig& cfg,
                                          const fs::path& models_dir,
                                          const LogFn& log) {
  validate(cfg);
  const Corpus corpus = load_corpus(manifest_path);
  fs::create_directories(models_dir);
  std::vector<TrainSummary> out;
  for (Variant v : variants) {
    auto rng = make_rng(cfg.seed, "init", index_of(v));
    Network net = Network::build(arch, label_space_for(v), corpus.manifest.classes, rng);
    std::ofstream csv(metrics_path(models_dir, v));
    if (!csv) throw Error("cannot write " + metrics_path(models_dir, v).string());
    csv << "epoch,loss,test_accuracy\n";
    TrainSummary s;
    s.variant = v;
    s.result = train(net, corpus, v, cfg, [&](const EpochMetrics& m) {
      csv << m.epoch << ',' << format_double(m.loss) << ',' << format_double(m.test_accuracy)
          << '\n';
      say(log, std::string(variant_name(v)) + " epoch " + std::to_string(m.epoch) +
                   " loss " + format_double(m.loss) + " test_accuracy " +
                   format_double(m.test_accuracy));
    });
    s.test_accuracy = s.result.epochs.empty() ? 0.0 : s.result.epochs.back().test_accuracy;
    save_checkpoint(net, checkpoint_path(models_dir, v));
    write_json_file(models_dir / (std::string(variant_name(v)) + "_config.json"),
                    {{"stage", "train"},
                     {"variant", variant_name(v)},
                     {"manifest", path_from(models_dir, manifest_path)},
                     {"architecture", to_json(arch)},
                     {"train", to_json(cfg)}});
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view map_source_name(MapSource s) {
  switch (s) {
    case MapSource::cnn1: return "cnn1";
    case MapSource::cnn2: return "cnn2";
    case MapSource::cnn3: return "cnn3";
    case MapSource::cnn23: return "cnn23";
  }
  return "?";
}

MapSource parse_map_source(std::string_view s) {
  if (s == "cnn1") return MapSource::cnn1;
  if (s == "cnn2") return MapSource::cnn2;
  if (s == "cnn3") return MapSource::cnn3;
  if (s == "cnn23") return MapSource::cnn23;
  throw ConfigError("unknown model '" + std::string(s) + "' (cnn1|cnn2|cnn3|cnn23)");
}

std::string MapRequest::name() const {
  return std::string(map_source_name(source)) + (smooth ? "_smooth" : "");
}

const Network& ModelSet::get(Variant v) const {
  const std::optional<Network>& slot =
      v == Variant::cnn1 ? cnn1 : v == Variant::cnn2 ? cnn2 : cnn3;
  if (!slot) throw StateError(std::string(variant_name(v)) + " model not loaded");
  return *slot;
}

ModelSet load_models(const fs::path& dir, const std::vector<MapRequest>& requests) {
  std::set<Variant> needed{Variant::cnn1};
  for (const MapRequest& r : requests) {
    for (Variant v : networks_for(r.source)) needed.insert(v);
  }
  ModelSet m;
  for (Variant v : needed) {
    const fs::path p = checkpoint_path(dir, v);
    if (!fs::exists(p)) throw Error("missing checkpoint " + p.string());
    Network net = load_checkpoint(p, label_space_for(v));
    if (v == Variant::cnn1) m.cnn1 = std::move(net);
    else if (v == Variant::cnn2) m.cnn2 = std::move(net);
    else m.cnn3 = std::move(net);
  }
  if (m.cnn2 && m.cnn2->class_names() != m.cnn1->class_names()) {
    throw ConfigError("cnn2 classes differ from cnn1");
  }
  if (m.cnn3 && m.cnn3->class_names() != m.cnn1->class_names()) {
    throw ConfigError("cnn3 classes differ from cnn1");
  }
  return m;
}

ImageSaliency extract_saliency(const ModelSet& models, const Tensor& image,
                               const std::vector<MapRequest>& requests,
                               const SaliencyConfig& cfg) {
  validate(cfg);
  ImageSaliency s;
  s.label = classify(models.get(Variant::cnn1), image).label;
  for (const MapRequest& r : requests) {
    for (Variant v : networks_for(r.source)) {
      const std::size_t k = index_of(v);
      if (s.gd[k]) continue;
      const Network& net = models.get(v);
      s.gd[k] = run_gd(net, make_objective(net, s.label), image, cfg);
      s.unit[k] = postprocess(s.gd[k]->raw, cfg);
      s.unit[k]->provenance = std::string(variant_name(v));
    }
  }
  for (const MapRequest& r : requests) {
    SaliencyMap map = r.source == MapSource::cnn23
                          ? combine(*s.unit[1], *s.unit[2], cfg.norm)
                          : *s.unit[index_of(networks_for(r.source)[0])];
    if (r.smooth) map = smooth(map, cfg);
    s.maps.push_back(std::move(map));
  }
  return s;
}

void run_saliency_stage(const fs::path& manifest_path, const fs::path& models_dir,
                        const SaliencyStageConfig& cfg, const fs::path& out_dir,
                        const LogFn& log) {
  validate(cfg.saliency);
  if (cfg.requests.empty()) throw ConfigError("no saliency model requested");
  const ModelSet models = load_models(models_dir, cfg.requests);
  const Corpus corpus = load_corpus(manifest_path);
  const auto samples = pick(corpus, cfg.split, cfg.limit);
  for (const MapRequest& r : cfg.requests) {
    fs::create_directories(out_dir / r.name());
    write_json_file(out_dir / r.name() / "config.json", stage_snapshot(cfg, r));
  }
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    const LabeledSample& sample = *samples[i];
    const ImageSaliency s = extract_saliency(models, sample.image, cfg.requests, cfg.saliency);
    write_saliency_outputs(sample.id, s, cfg, corpus.manifest.classes, out_dir);
    const std::size_t n = ++done;
    if (n % 50 == 0 || n == samples.size()) {
      std::lock_guard<std::mutex> lock(log_mutex);
      say(log, "saliency " + std::to_string(n) + "/" + std::to_string(samples.size()));
    }
  });
}

void run_saliency_image(const fs::path& image_path, const fs::path& models_dir,
                        const SaliencyStageConfig& cfg, const fs::path& out_dir) {
  validate(cfg.saliency);
  const ModelSet models = load_models(models_dir, cfg.requests);
  const Image8 img = read_png(image_path);
  if (img.channels != 3) throw FormatError(image_path.string() + ": expected an RGB image");
  const Tensor image = rgb8_to_tensor(img);
  if (image.shape() != models.get(Variant::cnn1).input_shape()) {
    throw ShapeError(image_path.string() + ": image " + shape_to_string(image.shape()) +
                     " does not match network input " +
                     shape_to_string(models.get(Variant::cnn1).input_shape()));
  }
  for (const MapRequest& r : cfg.requests) {
    fs::create_directories(out_dir / r.name());
    write_json_file(out_dir / r.name() / "config.json", stage_snapshot(cfg, r));
  }
  const ImageSaliency s = extract_saliency(models, image, cfg.requests, cfg.saliency);
  write_saliency_outputs(image_path.stem().string(), s, cfg,
                         models.get(Variant::cnn1).class_names(), out_dir);
}

SaliencyMap read_map_png(const fs::path& path) {
  const Image8 img = read_png(path);
  if (img.channels != 1) throw FormatError(path.string() + ": expected a gray map");
  SaliencyMap m(img.height, img.width);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = img.pixels[i] / 255.0;
  m.state = MapState::smoothed;
  m.provenance = path.parent_path().filename().string();
  return m;
}

// ---------------------------------------------------------------------------

std::string_view segment_status_name(SegmentStatus s) {
  switch (s) {
    case SegmentStatus::ok: return "ok";
    case SegmentStatus::no_salient_pixels: return "no_salient_pixels";
    case SegmentStatus::no_proposals: return "no_proposals";
  }
  return "?";
}

SegmentOutcome segment_image(const std::string& id, const Tensor& image,
                             const SaliencyMap& map, const SegmentationConfig& cfg) {
  SegmentOutcome o;
  o.id = id;
  o.refined = refine(image, map, cfg);
  if (o.refined.degenerate) {
    o.status = SegmentStatus::no_salient_pixels;
    return o;
  }
  const auto proposals = propose(o.refined, cfg);
  o.proposals = proposals.size();
  o.selection = select(o.refined, proposals, cfg);
  if (!o.selection) o.status = SegmentStatus::no_proposals;
  return o;
}

std::vector<SegmentOutcome> run_segment_stage(const fs::path& manifest_path,
                                              const fs::path& maps_dir,
                                              const SegmentStageConfig& cfg,
                                              const fs::path& out_dir,
                                              const LogFn& log) {
  validate(cfg.segmentation);
  if (!fs::is_directory(maps_dir)) throw Error("missing maps directory " + maps_dir.string());
  const Corpus corpus = load_corpus(manifest_path);
  std::vector<const LabeledSample*> samples;
  for (const LabeledSample* s : corpus.split(cfg.split)) {
    if (fs::exists(maps_dir / (s->id + ".png"))) samples.push_back(s);
  }
  if (samples.empty()) throw Error("no saliency maps for the split in " + maps_dir.string());
  fs::create_directories(out_dir);
  write_json_file(out_dir / "config.json",
                  {{"stage", "segment"},
                   {"maps", path_from(out_dir, maps_dir)},
                   {"split", split_name(cfg.split)},
                   {"segment", to_json(cfg.segmentation)}});
  std::vector<SegmentOutcome> outcomes(samples.size());
  std::mutex log_mutex;
  parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
    const LabeledSample& sample = *samples[i];
    const SaliencyMap map = read_map_png(maps_dir / (sample.id + ".png"));
    SegmentOutcome o = segment_image(sample.id, sample.image, map, cfg.segmentation);
    write_unit_png(out_dir / (sample.id + "_refined.png"), o.refined);
    Json j = {{"id", sample.id},
              {"status", segment_status_name(o.status)},
              {"proposals", o.proposals},
              {"delta", cfg.segmentation.delta}};
    if (o.selection) {
      write_mask_png(out_dir / (sample.id + "_mask.png"), o.selection->mask);
      write_mask_png(out_dir / (sample.id + "_m1.png"),
                     threshold_mask(o.refined, cfg.segmentation.delta));
      j["proposal_index"] = o.selection->index;
      j["jaccard"] = o.selection->score;
      j["delta_value"] = o.selection->delta_value;
    } else {
      std::lock_guard<std::mutex> lock(log_mutex);
      say(log, "warning: " + sample.id + ": no segmentation (" +
                   std::string(segment_status_name(o.status)) + ")");
    }
    write_json_file(out_dir / (sample.id + ".json"), j);
    outcomes[i] = std::move(o);
  });
  say(log, "segment " + std::to_string(samples.size()) + " images");
  return outcomes;
}

// ---------------------------------------------------------------------------

std::vector<EvalReport> run_eval_stage(const fs::path& manifest_path,
                                       const EvalStageConfig& cfg,
                                       const fs::path& out_dir, const LogFn& log) {
  if (cfg.inputs.empty() && !cfg.gaussian_baseline) {
    throw ConfigError("nothing to evaluate");
  }
  std::set<std::string> names;
  for (const EvalInput& in : cfg.inputs) {
    if (!names.insert(in.name).second) throw ConfigError("duplicate method name " + in.name);
    if (!fs::is_directory(in.maps_dir)) {
      throw Error("missing maps directory " + in.maps_dir.string());
    }
  }
  const Corpus corpus = load_corpus(manifest_path);
  const auto samples = corpus.split(cfg.split);
  fs::create_directories(out_dir);

  std::vector<EvalReport> reports;
  auto evaluate = [&](const std::string& name,
                      const std::function<std::optional<SaliencyMap>(const LabeledSample&)>& map_for,
                      const std::optional<fs::path>& segments) {
    const fs::path dir = out_dir / name;
    fs::create_directories(dir / "curves");
    ReportBuilder builder(name, cfg.beta2);
    for (const LabeledSample* s : samples) {
      std::optional<SaliencyMap> map;
      try {
        map = map_for(*s);
      } catch (const Error& e) {
        say(log, "error: " + name + ": " + s->id + ": " + e.what());
        continue;
      }
      if (!map) continue;
      if (map->height != s->mask.height || map->width != s->mask.width) {
        say(log, "error: " + name + ": " + s->id + ": map " + std::to_string(map->height) +
                     "x" + std::to_string(map->width) + " vs ground truth " +
                     std::to_string(s->mask.height) + "x" + std::to_string(s->mask.width));
        continue;
      }
      const PRCurve curve = pr_curve(*map, s->mask);
      builder.add_map(s->id, curve);
      write_curve_csv(dir / "curves" / (s->id + ".csv"), curve, cfg.beta2);
      if (segments) {
        const fs::path mask_path = *segments / (s->id + "_mask.png");
        const fs::path json_path = *segments / (s->id + ".json");
        if (fs::exists(mask_path)) {
          const BinaryMask pred = read_mask_png(mask_path);
          if (!pred.same_dims(s->mask)) {
            say(log, "error: " + name + ": " + s->id + ": segmentation size differs");
            continue;
          }
          builder.add_segmentation(s->id, pred, s->mask);
        } else if (fs::exists(json_path)) {
          // Documented no-segmentation result: scored as an empty mask.
          builder.add_segmentation(s->id, BinaryMask(s->mask.height, s->mask.width), s->mask);
        }
      }
    }
    EvalReport r = builder.finish();
    write_per_image_csv(dir / "per_image.csv", r);
    write_mean_curve_csv(dir / "mean_curve.csv", r);
    say(log, "eval " + name + ": " + std::to_string(r.ids.size()) + " maps, mean max F " +
                 format_double(r.mean_max_f) +
                 (r.seg_ids.empty() ? "" : ", segmentation F " + format_double(r.mean_seg_f)));
    reports.push_back(std::move(r));
  };

  for (const EvalInput& in : cfg.inputs) {
    evaluate(
        in.name,
        [&](const LabeledSample& s) -> std::optional<SaliencyMap> {
          const fs::path p = in.maps_dir / (s.id + ".png");
          if (!fs::exists(p)) return std::nullopt;
          return read_map_png(p);
        },
        in.segments_dir);
  }
  if (cfg.gaussian_baseline) {
    // Scored on the images the other methods cover so the means are comparable.
    std::set<std::string> covered;
    for (const EvalReport& r : reports) covered.insert(r.ids.begin(), r.ids.end());
    evaluate(
        "gaussian",
        [&](const LabeledSample& s) -> std::optional<SaliencyMap> {
          if (!reports.empty() && !covered.count(s.id)) return std::nullopt;
          return gaussian_baseline(s.mask.height, s.mask.width);
        },
        std::nullopt);
  }

  write_comparison_csv(out_dir / "comparison.csv", reports);
  write_pr_svg(out_dir / "pr.svg", reports);
  write_fbeta_svg(out_dir / "fbeta.svg", reports);
  Json methods = Json::array();
  Json inputs = Json::array();
  for (const EvalReport& r : reports) {
    Json m = {{"method", r.method}, {"images", r.ids.size()}, {"mean_max_f_beta", r.mean_max_f}};
    if (!r.seg_ids.empty()) {
      m["segmented_images"] = r.seg_ids.size();
      m["mean_segmentation_f_beta"] = r.mean_seg_f;
    }
    methods.push_back(m);
  }
  for (const EvalInput& in : cfg.inputs) {
    inputs.push_back({{"name", in.name},
                      {"maps", path_from(out_dir, in.maps_dir)},
                      {"segments", in.segments_dir ? path_from(out_dir, *in.segments_dir) : ""}});
  }
  write_json_file(out_dir / "summary.json", {{"beta2", cfg.beta2}, {"methods", methods}});
  write_json_file(out_dir / "config.json",
                  {{"stage", "eval"},
                   {"split", split_name(cfg.split)},
                   {"beta2", cfg.beta2},
                   {"gaussian_baseline", cfg.gaussian_baseline},
                   {"inputs", inputs}});
  return reports;
}

// ---------------------------------------------------------------------------

ReproduceConfig default_reproduce_config(std::uint64_t seed) {
  ReproduceConfig c;
  c.dataset.seed = seed;
  c.train.seed = seed;
  c.segmentation.seed = seed;
  return c;
}

ReproduceSummary run_reproduce(const ReproduceConfig& cfg, const fs::path& out,
                               const LogFn& log) {
  fs::create_directories(out);
  write_json_file(out / "config.json",
                  {{"stage", "reproduce"},
                   {"dataset", to_json(cfg.dataset)},
                   {"architecture", to_json(cfg.arch)},
                   {"train", to_json(cfg.train)},
                   {"saliency", to_json(cfg.saliency)},
                   {"segment", to_json(cfg.segmentation)}});
  say(log, "dataset");
  generate(cfg.dataset, out / "dataset");
  write_json_file(out / "dataset" / "config.json",
                  {{"stage", "dataset"}, {"dataset", to_json(cfg.dataset)}});
  const fs::path manifest = out / "dataset" / "manifest.json";

  const auto trained = run_train_stage(
      manifest, {Variant::cnn1, Variant::cnn2, Variant::cnn3}, cfg.arch, cfg.train,
      out / "models", log);

  SaliencyStageConfig sal;
  sal.requests = {{MapSource::cnn1, true}, {MapSource::cnn23, false}, {MapSource::cnn23, true}};
  sal.saliency = cfg.saliency;
  sal.jobs = cfg.jobs;
  run_saliency_stage(manifest, out / "models", sal, out / "saliency", log);

  SegmentStageConfig seg;
  seg.segmentation = cfg.segmentation;
  seg.jobs = cfg.jobs;
  run_segment_stage(manifest, out / "saliency" / "cnn23_smooth", seg,
                    out / "segment" / "cnn23_smooth", log);

  EvalStageConfig ev;
  ev.inputs = {{"cnn23_smooth", out / "saliency" / "cnn23_smooth",
                out / "segment" / "cnn23_smooth"},
               {"cnn23", out / "saliency" / "cnn23", std::nullopt},
               {"cnn1_smooth", out / "saliency" / "cnn1_smooth", std::nullopt}};
  const auto reports = run_eval_stage(manifest, ev, out / "eval", log);

  ReproduceSummary s;
  s.cnn1_accuracy = trained[0].test_accuracy;
  s.cnn2_accuracy = trained[1].test_accuracy;
  s.cnn3_accuracy = trained[2].test_accuracy;
  for (const EvalReport& r : reports) {
    if (r.method == "cnn23_smooth") {
      s.f_cnn23 = r.mean_max_f;
      s.f_segmentation = r.mean_seg_f;
      s.test_images = r.ids.size();
    } else if (r.method == "cnn1_smooth") {
      s.f_cnn1 = r.mean_max_f;
    } else if (r.method == "gaussian") {
      s.f_gaussian = r.mean_max_f;
    }
  }

  struct Row {
    std::string quantity;
    double value;
    std::string target;
    bool pass;
  };
  const std::vector<Row> rows = {
      {"cnn1_test_accuracy", s.cnn1_accuracy, ">= 0.90", s.cnn1_accuracy >= 0.90},
      {"cnn2_test_accuracy", s.cnn2_accuracy, "reported", true},
      {"cnn3_test_accuracy", s.cnn3_accuracy, "reported", true},
      {"max_f_cnn23_smooth", s.f_cnn23, ">= 0.60", s.f_cnn23 >= 0.60},
      {"max_f_gaussian", s.f_gaussian, "reported", true},
      {"margin_over_gaussian", s.f_cnn23 - s.f_gaussian, ">= 0.10",
       s.f_cnn23 - s.f_gaussian >= 0.10},
      {"max_f_cnn1_smooth", s.f_cnn1, "<= max_f_cnn23_smooth", s.f_cnn23 >= s.f_cnn1},
      {"segmentation_f", s.f_segmentation, ">= max_f_cnn23_smooth - 0.05",
       s.f_segmentation >= s.f_cnn23 - 0.05},
  };
  std::ofstream csv(out / "summary.csv");
  std::ofstream md(out / "summary.md");
  if (!csv || !md) throw Error("cannot write summary in " + out.string());
  csv << "quantity,value,target,pass\n";
  md << "# reproduce summary\n\n"
     << "seed " << cfg.dataset.seed << ", " << s.test_images << " test images, beta^2 = "
     << format_double(kDefaultBeta2) << "\n\n"
     << "| quantity | value | target | pass |\n|---|---|---|---|\n";
  Json rows_json = Json::array();
  for (const Row& r : rows) {
    csv << r.quantity << ',' << format_double(r.value) << ',' << r.target << ','
        << (r.pass ? "yes" : "no") << '\n';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.value);
    md << "| " << r.quantity << " | " << buf << " | " << r.target << " | "
       << (r.pass ? "yes" : "no") << " |\n";
    rows_json.push_back({{"quantity", r.quantity}, {"value", r.value}, {"target", r.target},
                         {"pass", r.pass}});
  }
  write_json_file(out / "summary.json", {{"seed", cfg.dataset.seed}, {"rows", rows_json}});
  return s;
}

}  // namespace gdsal
