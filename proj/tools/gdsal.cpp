// gdsal: dataset -> train -> saliency -> segment -> eval, or all of it via reproduce.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gdsal/config.hpp"
#include "gdsal/errors.hpp"
#include "gdsal/pipeline.hpp"

using namespace gdsal;

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 1;

void error_line(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

void log_line(const std::string& msg) { std::cerr << msg << std::endl; }

fs::path default_out() {
  const char* env = std::getenv("GDSAL_OUT");
  return env && *env ? fs::path(env) : fs::path("gdsal_out");
}

template <class T, class V>
void put(T& dst, const std::optional<V>& v) {
  if (v) dst = *v;
}

// Values from --config, then explicit flags on top.
struct Settings {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;

  GenerationConfig dataset;
  Architecture arch;
  TrainConfig train;
  SaliencyConfig saliency;
  SegmentationConfig segment;

  void load_file() {
    if (config_file.empty()) return;
    const Json j = read_json_file(config_file);
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [k, v] : j.items()) {
      if (k == "dataset") apply_json(dataset, v);
      else if (k == "architecture") apply_json(arch, v);
      else if (k == "train") apply_json(train, v);
      else if (k == "saliency") apply_json(saliency, v);
      else if (k == "segment") apply_json(segment, v);
      else if (k == "seed") seed = seed ? seed : std::optional(v.get<std::uint64_t>());
      else if (k == "jobs") jobs = jobs ? jobs : std::optional(v.get<std::size_t>());
      else if (k == "out") out = out ? out : std::optional(v.get<std::string>());
      else throw ConfigError("unknown config section '" + k + "'");
    }
  }

  void apply_seed() {
    if (!seed) return;
    dataset.seed = *seed;
    train.seed = *seed;
    segment.seed = *seed;
  }

  fs::path out_dir() const { return out ? fs::path(*out) : default_out(); }
  std::size_t job_count() const { return jobs ? *jobs : 1; }
};

void add_common(CLI::App* cmd, Settings& s) {
  cmd->add_option("--config", s.config_file, "JSON config file; flags override it")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", s.seed, "root seed for every random stream");
  cmd->add_option("--out", s.out, "output directory (default $GDSAL_OUT or ./gdsal_out)");
}

Split split_of(const std::string& name) {
  try {
    return parse_split(name);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<MapRequest> requests_of(const std::vector<std::string>& models, bool smooth) {
  std::vector<MapRequest> out;
  for (const std::string& m : models) out.push_back({parse_map_source(m), smooth});
  return out;
}

EvalInput parse_eval_input(const std::string& arg) {
  const auto eq = arg.find('=');
  EvalInput in;
  if (eq == std::string::npos) {
    in.maps_dir = arg;
    in.name = fs::path(arg).lexically_normal().filename().string();
    if (in.name.empty()) in.name = fs::path(arg).lexically_normal().parent_path().filename().string();
  } else {
    in.name = arg.substr(0, eq);
    in.maps_dir = arg.substr(eq + 1);
  }
  if (in.name.empty() || in.maps_dir.empty()) {
    throw ConfigError("bad map directory argument '" + arg + "' (DIR or NAME=DIR)");
  }
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-descent object saliency on a synthetic shape corpus"};
  app.require_subcommand(1);
  Settings s;

  // dataset
  auto* ds = app.add_subcommand("dataset", "generate the synthetic corpus");
  add_common(ds, s);
  std::optional<std::size_t> ds_classes, ds_size, ds_train, ds_test;
  ds->add_option("--classes", ds_classes, "number of classes");
  ds->add_option("--size", ds_size, "image side in pixels");
  ds->add_option("--train", ds_train, "training images");
  ds->add_option("--test", ds_test, "test images");

  // train
  auto* tr = app.add_subcommand("train", "train cnn1, cnn2 and cnn3");
  add_common(tr, s);
  std::string tr_manifest, tr_variant;
  std::optional<std::size_t> tr_epochs, tr_batch;
  std::optional<double> tr_lr, tr_momentum;
  tr->add_option("--manifest", tr_manifest, "dataset manifest (default <out>/dataset/manifest.json)");
  tr->add_option("--variant", tr_variant, "train only this variant")
      ->check(CLI::IsMember({"cnn1", "cnn2", "cnn3"}));
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--momentum", tr_momentum);

  // saliency
  auto* sa = app.add_subcommand("saliency", "extract saliency maps");
  add_common(sa, s);
  sa->add_option("--jobs", s.jobs, "worker threads over images");
  std::string sa_manifest, sa_models, sa_image, sa_split = "test";
  std::vector<std::string> sa_model{"cnn23"};
  bool sa_smooth = false;
  std::optional<std::size_t> sa_iters, sa_limit;
  std::optional<double> sa_step;
  sa->add_option("--manifest", sa_manifest);
  sa->add_option("--models", sa_models, "checkpoint directory (default <out>/models)");
  sa->add_option("--model", sa_model, "cnn1|cnn2|cnn3|cnn23, repeatable")
      ->check(CLI::IsMember({"cnn1", "cnn2", "cnn3", "cnn23"}));
  sa->add_flag("--smooth", sa_smooth, "apply closing and opening to the maps");
  sa->add_option("--iters", sa_iters, "gradient descent iterations T");
  sa->add_option("--step", sa_step, "step parameter");
  sa->add_option("--image", sa_image, "single RGB PNG instead of a manifest split")
      ->check(CLI::ExistingFile);
  sa->add_option("--split", sa_split)->check(CLI::IsMember({"train", "test"}));
  sa->add_option("--limit", sa_limit, "process at most this many images");

  // segment
  auto* sg = app.add_subcommand("segment", "refine saliency maps into object masks");
  add_common(sg, s);
  sg->add_option("--jobs", s.jobs, "worker threads over images");
  std::string sg_manifest, sg_maps, sg_split = "test";
  std::optional<std::size_t> sg_runs, sg_seeds, sg_budget;
  std::optional<double> sg_delta, sg_tol, sg_fraction;
  sg->add_option("--manifest", sg_manifest);
  sg->add_option("--maps", sg_maps, "saliency map directory (default <out>/saliency/cnn23_smooth)");
  sg->add_option("--runs", sg_runs);
  sg->add_option("--seeds", sg_seeds, "seeds per run");
  sg->add_option("--budget", sg_budget, "proposal budget");
  sg->add_option("--delta", sg_delta, "saliency mask threshold as a fraction of max");
  sg->add_option("--tolerance", sg_tol, "region growing colour tolerance");
  sg->add_option("--salient-fraction", sg_fraction);
  sg->add_option("--split", sg_split)->check(CLI::IsMember({"train", "test"}));

  // eval
  auto* ev = app.add_subcommand("eval", "score maps and segmentations");
  add_common(ev, s);
  std::string ev_manifest, ev_split = "test";
  std::vector<std::string> ev_maps, ev_compare;
  std::vector<std::string> ev_segments;
  bool ev_no_gauss = false;
  std::optional<double> ev_beta2;
  ev->add_option("--manifest", ev_manifest);
  ev->add_option("--maps", ev_maps, "map directory, DIR or NAME=DIR");
  ev->add_option("--compare", ev_compare, "more map directories to compare side by side");
  ev->add_option("--segments", ev_segments,
                 "segmentation directory NAME=DIR, or DIR for the first map directory");
  ev->add_flag("--no-gaussian", ev_no_gauss, "skip the centred Gaussian baseline");
  ev->add_option("--beta2", ev_beta2);
  ev->add_option("--split", ev_split)->check(CLI::IsMember({"train", "test"}));

  // reproduce
  auto* rp = app.add_subcommand("reproduce", "run the whole toy benchmark");
  add_common(rp, s);
  rp->add_option("--jobs", s.jobs, "worker threads over images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_line("usage", e.what());
    return kUsage;
  }

  fs::path out;
  try {
    s.load_file();
    s.apply_seed();
    out = s.out_dir();
    const fs::path manifest_default = out / "dataset" / "manifest.json";
    auto manifest_or = [&](const std::string& m) {
      return m.empty() ? manifest_default : fs::path(m);
    };

    if (ds->parsed()) {
      put(s.dataset.num_classes, ds_classes);
      put(s.dataset.image_size, ds_size);
      put(s.dataset.train_count, ds_train);
      put(s.dataset.test_count, ds_test);
      const DatasetManifest m = generate(s.dataset, out / "dataset");
      write_json_file(out / "dataset" / "config.json",
                      {{"stage", "dataset"}, {"dataset", to_json(s.dataset)}});
      std::cout << "wrote " << m.samples.size() << " samples to "
                << (out / "dataset" / "manifest.json").string() << "\n";
    } else if (tr->parsed()) {
      put(s.train.epochs, tr_epochs);
      put(s.train.batch_size, tr_batch);
      put(s.train.learning_rate, tr_lr);
      put(s.train.momentum, tr_momentum);
      std::vector<Variant> variants{Variant::cnn1, Variant::cnn2, Variant::cnn3};
      if (!tr_variant.empty()) variants = {parse_variant(tr_variant)};
      const auto done = run_train_stage(manifest_or(tr_manifest), variants, s.arch, s.train,
                                        out / "models", log_line);
      for (const TrainSummary& t : done) {
        std::cout << variant_name(t.variant) << " test accuracy "
                  << format_double(t.test_accuracy) << "\n";
      }
    } else if (sa->parsed()) {
      put(s.saliency.iterations, sa_iters);
      put(s.saliency.step, sa_step);
      SaliencyStageConfig cfg;
      cfg.requests = requests_of(sa_model, sa_smooth);
      cfg.saliency = s.saliency;
      cfg.split = split_of(sa_split);
      put(cfg.limit, sa_limit);
      cfg.jobs = s.job_count();
      const fs::path models = sa_models.empty() ? out / "models" : fs::path(sa_models);
      if (!sa_image.empty()) {
        run_saliency_image(sa_image, models, cfg, out / "saliency");
      } else {
        run_saliency_stage(manifest_or(sa_manifest), models, cfg, out / "saliency", log_line);
      }
      for (const MapRequest& r : cfg.requests) {
        std::cout << "maps in " << (out / "saliency" / r.name()).string() << "\n";
      }
    } else if (sg->parsed()) {
      put(s.segment.runs, sg_runs);
      put(s.segment.seeds_per_run, sg_seeds);
      put(s.segment.proposal_budget, sg_budget);
      put(s.segment.delta, sg_delta);
      put(s.segment.growth_tolerance, sg_tol);
      put(s.segment.salient_fraction, sg_fraction);
      SegmentStageConfig cfg;
      cfg.segmentation = s.segment;
      cfg.split = split_of(sg_split);
      cfg.jobs = s.job_count();
      const fs::path maps =
          sg_maps.empty() ? out / "saliency" / "cnn23_smooth" : fs::path(sg_maps);
      const fs::path dest = out / "segment" / maps.lexically_normal().filename();
      const auto outcomes = run_segment_stage(manifest_or(sg_manifest), maps, cfg, dest, log_line);
      std::size_t ok = 0;
      for (const SegmentOutcome& o : outcomes) ok += o.status == SegmentStatus::ok;
      std::cout << ok << "/" << outcomes.size() << " images segmented into " << dest.string()
                << "\n";
    } else if (ev->parsed()) {
      EvalStageConfig cfg;
      for (const std::string& m : ev_maps) cfg.inputs.push_back(parse_eval_input(m));
      for (const std::string& m : ev_compare) cfg.inputs.push_back(parse_eval_input(m));
      if (cfg.inputs.empty()) {
        cfg.inputs.push_back({"cnn23_smooth", out / "saliency" / "cnn23_smooth", std::nullopt});
      }
      for (const std::string& seg : ev_segments) {
        const auto eq = seg.find('=');
        const std::string name = eq == std::string::npos ? cfg.inputs[0].name : seg.substr(0, eq);
        const fs::path dir = eq == std::string::npos ? seg : seg.substr(eq + 1);
        bool bound = false;
        for (EvalInput& in : cfg.inputs) {
          if (in.name == name) {
            in.segments_dir = dir;
            bound = true;
          }
        }
        if (!bound) throw ConfigError("--segments names unknown method '" + name + "'");
      }
      cfg.gaussian_baseline = !ev_no_gauss;
      put(cfg.beta2, ev_beta2);
      cfg.split = split_of(ev_split);
      const auto reports = run_eval_stage(manifest_or(ev_manifest), cfg, out / "eval", log_line);
      std::cout << "method,images,mean_max_f_beta,mean_segmentation_f_beta\n";
      for (const EvalReport& r : reports) {
        std::cout << r.method << ',' << r.ids.size() << ',' << format_double(r.mean_max_f) << ','
                  << (r.seg_ids.empty() ? "" : format_double(r.mean_seg_f)) << "\n";
      }
    } else if (rp->parsed()) {
      ReproduceConfig cfg = default_reproduce_config(s.seed ? *s.seed : 7);
      if (!s.config_file.empty()) {
        cfg.dataset = s.dataset;
        cfg.arch = s.arch;
        cfg.train = s.train;
        cfg.saliency = s.saliency;
        cfg.segmentation = s.segment;
      }
      cfg.jobs = s.job_count();
      const ReproduceSummary r = run_reproduce(cfg, out, log_line);
      std::cout << "cnn1 test accuracy " << format_double(r.cnn1_accuracy) << "\n"
                << "cnn2 test accuracy " << format_double(r.cnn2_accuracy) << "\n"
                << "cnn3 test accuracy " << format_double(r.cnn3_accuracy) << "\n"
                << "mean max F cnn23_smooth " << format_double(r.f_cnn23) << "\n"
                << "mean max F cnn1_smooth " << format_double(r.f_cnn1) << "\n"
                << "mean max F gaussian " << format_double(r.f_gaussian) << "\n"
                << "segmentation F " << format_double(r.f_segmentation) << "\n"
                << "summary in " << (out / "summary.md").string() << "\n";
    }
  } catch (const ConfigError& e) {
    error_line("config", e.what());
    return kUsage;
  } catch (const Json::exception& e) {
    error_line("config", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    error_line("runtime", e.what());
    return kRuntime;
  }
  return 0;
}
