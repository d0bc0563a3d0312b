#include "sim2real/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fmt/format.h>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "sim2real/checkpoint.hpp"
#include "sim2real/eval.hpp"
#include "sim2real/features.hpp"
#include "sim2real/fs_util.hpp"
#include "sim2real/manifest.hpp"
#include "sim2real/png_io.hpp"
#include "sim2real/render.hpp"
#include "sim2real/toy_data.hpp"

namespace sim2real {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kToyDepthScale = 0.01;        // mm per PNG unit
constexpr double kPredictionDepthScale = 0.02;  // up to ~1.3 m
constexpr int kToySequenceLength = 8;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return fmt::format("{:016x}", fnv1a(ss.str()));
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw InputError(fmt::format("{} is not set", what));
  if (!fs::exists(p)) throw IoError(fmt::format("{} not found: {}", what, p.string()));
}

LoadOptions load_options(const ExperimentConfig& c) {
  LoadOptions o;
  if (c.data.preprocess) o.preprocess = c.data.spec;
  return o;
}

std::vector<PairedSample> load_pairs(const fs::path& manifest, const ExperimentConfig& c, const char* what) {
  require_file(manifest, what);
  auto pairs = load_paired(load_manifest(manifest), load_options(c));
  if (pairs.empty()) throw InputError(fmt::format("{} '{}' has no frames", what, manifest.string()));
  return pairs;
}

std::vector<UnpairedSample> load_unpaired_set(const fs::path& manifest, const ExperimentConfig& c,
                                              const char* what) {
  require_file(manifest, what);
  auto samples = load_unpaired(load_manifest(manifest), load_options(c));
  if (samples.empty()) throw InputError(fmt::format("{} '{}' has no frames", what, manifest.string()));
  return samples;
}

std::string ordinal_name(int i) { return fmt::format("{:04}", i); }

template <typename Sample>
std::vector<Image> images_of(const std::vector<Sample>& samples) {
  std::vector<Image> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.image);
  return out;
}

// Mean hard MI between each pair's depth and its image intensity.
double mean_hard_mi(std::span<const PairedSample> pairs, const HistogramSpec& spec) {
  double sum = 0.0;
  for (const auto& p : pairs) sum += mutual_information(hard_joint_histogram(p.depth, intensity(p.image), spec));
  return sum / static_cast<double>(pairs.size());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

RunLog::RunLog(std::string name, const fs::path& file, bool echo)
    : name_(std::move(name)), out_(file, std::ios::app), echo_(echo) {
  if (!out_) throw IoError(fmt::format("cannot open log file '{}'", file.string()));
}

void RunLog::write(const char* level, const std::string& message) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[16];
  std::strftime(stamp, sizeof stamp, "%H:%M:%S", &tm);
  const std::string line = fmt::format("[{}] [{}] {}: {}\n", stamp, name_, level, message);
  std::lock_guard lock(mutex_);
  out_ << line << std::flush;
  if (echo_) std::fputs(line.c_str(), stderr);
}

RunDir RunDir::create(const fs::path& root) {
  RunDir r{root};
  for (const auto& d : {r.checkpoints(), r.images(), r.metrics(), r.logs()}) fs::create_directories(d);
  return r;
}

CommandContext begin_command(const ExperimentConfig& config, const std::string& command, bool quiet) {
  CommandContext ctx{RunDir::create(config.output_dir), nullptr};
  write_text_atomic(ctx.run.snapshot(), to_toml(config));
  ctx.log = std::make_shared<RunLog>(command, ctx.run.logs() / (command + ".log"), !quiet);
  ctx.log->info("run directory {}", ctx.run.root.string());
  return ctx;
}

// ------------------------------------------------------------------ toy-data

namespace {

DatasetManifest write_toy_set(const fs::path& root, const std::string& name, Domain domain, bool evaluation,
                              const std::vector<Image>& images, const std::vector<const DepthMap*>& depths) {
  DatasetManifest m;
  m.dataset_name = name;
  m.domain = domain;
  m.evaluation = evaluation;
  m.depth_scale_mm = kToyDepthScale;
  m.base_dir = root;
  if (!images.empty()) {
    m.width = images.front().width();
    m.height = images.front().height();
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t s = i / kToySequenceLength;
    if (s >= m.sequences.size()) m.sequences.push_back({fmt::format("{}_{:03}", name, s), {}, {}});
    auto& seq = m.sequences.back();
    const std::string stem = fmt::format("{}/{}", seq.sequence_id, ordinal_name(static_cast<int>(seq.frames.size())));
    const std::string frame = "images/" + name + "/" + stem + ".png";
    fs::create_directories((root / frame).parent_path());
    write_png_image(root / frame, images[i]);
    seq.frames.push_back(frame);
    if (!depths.empty()) {
      const std::string depth = "depth/" + name + "/" + stem + ".png";
      fs::create_directories((root / depth).parent_path());
      write_depth_png(root / depth, *depths[i], kToyDepthScale);
      seq.depths.push_back(depth);
    }
  }
  save_manifest(m, root / (name + ".json"));
  return m;
}

std::string toy_experiment_toml(const ExperimentConfig& c) {
  const int res = c.toy.resolution;
  return fmt::format(R"(# Desk-scale experiment on the generated toy data.
[experiment]
name = "toy"
ablation_id = "ours"
domain_a = "domain_a.json"
domain_b = "domain_b.json"
eval_manifest = "eval.json"
output_dir = "runs/toy"
seed = {seed}

[translation]
epochs = 30
batch_size = 4
generator_width = 16
generator_blocks = 4
discriminator_width = 16
checkpoint_every = 10

[depth]
epochs = 20
batch_size = 4
crop_size = {crop}
inference_width = {res}
inference_height = {res}
blocks = [1, 1, 1, 1]
base_width = 16
checkpoint_every = 10

[eval]
kid_subset_size = 32
kid_subsets = 10
mi_bins = 64

[ablation]
cells = ["baseline", "ours", "ours_cg"]
seeds = [0, 1, 2]
)",
                     fmt::arg("seed", c.seed), fmt::arg("res", res), fmt::arg("crop", std::max(8, res - res / 8)));
}

}  // namespace

ToyDataOutputs cmd_toy_data(const ExperimentConfig& config, bool quiet) {
  auto ctx = begin_command(config, "toy-data", quiet);
  const fs::path root = ctx.run.root;
  const auto data = generate_toy_dataset(config.toy.pairs, config.toy.resolution, config.seed);
  ctx.log->info("rendered {} domain-A pairs and {} domain-B frames at {}px", data.domain_a.size(),
                data.domain_b.size(), config.toy.resolution);

  std::vector<const DepthMap*> depths_a;
  for (const auto& p : data.domain_a) depths_a.push_back(&p.depth);
  write_toy_set(root, "domain_a", Domain::A, false, images_of(data.domain_a), depths_a);
  write_toy_set(root, "domain_b", Domain::B, false, images_of(data.domain_b), {});

  ToyDataOutputs out{root / "domain_a.json", root / "domain_b.json", {}, root / "experiment.toml"};
  if (config.toy.eval_frames > 0) {
    const auto eval = generate_toy_eval(config.toy.eval_frames, config.toy.resolution, config.seed);
    std::vector<const DepthMap*> depths_e;
    for (const auto& p : eval) depths_e.push_back(&p.depth);
    write_toy_set(root, "eval", Domain::B, true, images_of(eval), depths_e);
    out.eval = root / "eval.json";
    ctx.log->info("rendered {} held-out evaluation frames", eval.size());
  }
  write_text_atomic(out.experiment, toy_experiment_toml(config));
  ctx.log->info("wrote manifests and {}", out.experiment.string());
  return out;
}

// ----------------------------------------------------------- train-translate

TranslationResult cmd_train_translate(const ExperimentConfig& config, const TrainTranslateOptions& options) {
  if (config.ablation_id == AblationId::Baseline) {
    throw InputError("ablation_id baseline skips translation; nothing to train");
  }
  const auto a = load_pairs(config.domain_a, config, "domain-A manifest");
  const auto b = load_unpaired_set(config.domain_b, config, "domain-B manifest");
  auto ctx = begin_command(config, "train-translate", options.quiet);
  const auto& tc = config.translation;
  ctx.log->info("{} domain-A pairs, {} domain-B frames, {} epochs, lambda = ({}, {}, {})", a.size(), b.size(),
                tc.epochs, tc.weights.lambda_gan, tc.weights.lambda_cyc, tc.weights.lambda_mi);
  const fs::path ck = ctx.run.checkpoints();
  const fs::path curve_path = ctx.run.metrics() / "translation_loss.csv";

  auto on_epoch = [&](int epoch, TranslationModels& m, std::span<const LossRecord> curve) {
    double cyc = 0.0, mi = 0.0, total = 0.0;
    int n = 0;
    for (const auto& r : curve) {
      if (r.epoch != epoch) continue;
      cyc += r.cyc;
      mi += r.mi;
      total += r.total;
      ++n;
    }
    ctx.log->info("epoch {}/{}: total {:.4f} cyc {:.4f} mi {:.4f}", epoch, tc.epochs, total / n, cyc / n, mi / n);
    write_translation_curve_csv(curve_path, curve);
    if (epoch % config.translation_checkpoint_every == 0 || epoch == tc.epochs) {
      const std::string tag = fmt::format("_epoch{:03}", epoch);
      save_generator(ck / ("G" + tag + ".ckpt"), m.g, tc, epoch);
      save_generator(ck / ("F" + tag + ".ckpt"), m.f, tc, epoch);
      save_discriminator(ck / ("D_A" + tag + ".ckpt"), m.d_a, tc, epoch);
      save_discriminator(ck / ("D_B" + tag + ".ckpt"), m.d_b, tc, epoch);
      if (options.dump_histograms) {
        const Image fake = translate(m.g, a.front().image);
        const auto h = hard_joint_histogram(a.front().depth, intensity(fake), config.histogram);
        fs::create_directories(ctx.run.images() / "histograms");
        histogram_heatmap(h).save_png(ctx.run.images() / "histograms" / fmt::format("epoch{:03}.png", epoch));
      }
    }
  };
  auto result = train_translation(tc, a, b, on_epoch);
  save_generator(ck / "G.ckpt", result.models.g, tc, tc.epochs);
  save_generator(ck / "F.ckpt", result.models.f, tc, tc.epochs);
  save_discriminator(ck / "D_A.ckpt", result.models.d_a, tc, tc.epochs);
  save_discriminator(ck / "D_B.ckpt", result.models.d_b, tc, tc.epochs);
  write_translation_curve_csv(curve_path, result.curve);
  ctx.log->info("saved G, F, D_A, D_B to {}", ck.string());
  return result;
}

// --------------------------------------------------------- translate-dataset

fs::path cmd_translate_dataset(ExperimentConfig config, bool quiet) {
  if (config.translate_dataset.checkpoint.empty()) {
    config.translate_dataset.checkpoint = config.output_dir / "checkpoints" / "G.ckpt";
  }
  if (config.translate_dataset.manifest.empty()) config.translate_dataset.manifest = config.domain_a;
  const auto& tdc = config.translate_dataset;
  require_file(tdc.checkpoint, "generator checkpoint");
  require_file(tdc.manifest, "domain-A manifest");
  Generator g = load_generator(tdc.checkpoint);
  if (g->direction() != Direction::AtoB) {
    throw InputError(fmt::format("checkpoint '{}' is a {} generator; translate-dataset needs A->B",
                                 tdc.checkpoint.string(), to_string(g->direction())));
  }
  const DatasetManifest src = load_manifest(tdc.manifest);
  src.validate();
  if (!src.has_depth()) throw InputError(fmt::format("manifest '{}' has no depths to pair with", tdc.manifest.string()));

  auto ctx = begin_command(config, "translate-dataset", quiet);
  DatasetManifest out;
  out.dataset_name = src.dataset_name + "_translated";
  out.domain = Domain::A;
  out.depth_scale_mm = src.depth_scale_mm;
  out.width = src.width;
  out.height = src.height;
  if (src.intrinsics) out.intrinsics = src.resolve(*src.intrinsics).string();
  out.base_dir = ctx.run.root;
  int count = 0;
  for (const auto& seq : src.sequences) {
    SequenceManifest s{seq.sequence_id, {}, {}};
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      const Image fake = translate(g, read_png_image(src.resolve(seq.frames[i])));
      const std::string rel = fmt::format("images/translated/{}/{}.png", seq.sequence_id, ordinal_name(static_cast<int>(i)));
      fs::create_directories((ctx.run.root / rel).parent_path());
      write_png_image(ctx.run.root / rel, fake);
      s.frames.push_back(rel);
      s.depths.push_back(src.resolve(seq.depths[i]).string());
      ++count;
    }
    out.sequences.push_back(std::move(s));
  }
  const fs::path manifest_path = ctx.run.root / "translated.json";
  save_manifest(out, manifest_path);
  ctx.log->info("translated {} frames into {}", count, manifest_path.string());
  return manifest_path;
}

// --------------------------------------------------------------- train-depth

DepthTrainResult cmd_train_depth(ExperimentConfig config, const TrainDepthOptions& options) {
  if (config.depth_train_manifest.empty()) {
    config.depth_train_manifest =
        config.ablation_id == AblationId::Baseline ? config.domain_a : config.output_dir / "translated.json";
  }
  const auto pairs = load_pairs(config.depth_train_manifest, config, "depth training manifest");
  auto ctx = begin_command(config, "train-depth", options.quiet);
  const fs::path latest = ctx.run.checkpoints() / "depth.ckpt";
  const fs::path curve_path = ctx.run.metrics() / "depth_loss.csv";
  std::optional<fs::path> resume;
  std::vector<DepthLossRecord> previous;
  if (options.resume) {
    require_file(latest, "depth checkpoint to resume from");
    resume = latest;
    const int done = load_depth_checkpoint(latest).epochs_done;
    if (fs::exists(curve_path)) {
      std::istringstream in(read_text(curve_path));
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        DepthLossRecord r;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (ls >> r.epoch >> c1 >> r.step >> c2 >> r.mse && r.epoch <= done) previous.push_back(r);
      }
    }
    ctx.log->info("resuming after epoch {}", done);
  }
  ctx.log->info("{} training pairs from {}, {} epochs", pairs.size(), config.depth_train_manifest.string(),
                config.depth.epochs);

  std::vector<DepthLossRecord> curve = previous;
  auto on_epoch = [&](int epoch, DepthTrainState& state) {
    save_depth_checkpoint(latest, state, config.depth);
    if (epoch % config.depth_checkpoint_every == 0 || epoch == config.depth.epochs) {
      save_depth_checkpoint(ctx.run.checkpoints() / fmt::format("depth_epoch{:03}.ckpt", epoch), state, config.depth);
    }
    ctx.log->info("epoch {}/{} done", epoch, config.depth.epochs);
  };
  auto result = train_depth(config.depth, pairs, on_epoch, resume);
  curve.insert(curve.end(), result.curve.begin(), result.curve.end());
  result.curve = curve;
  write_depth_curve_csv(curve_path, result.curve);

  double last = 0.0;
  int n = 0;
  for (const auto& r : result.curve) {
    if (r.epoch == result.epochs_done) {
      last += r.mse;
      ++n;
    }
  }
  if (n > 0) {
    last /= n;
    ctx.log->info("final epoch mean MSE {:.4f} mm^2", last);
    if (options.strict && last > config.depth_strict_max_mse) {
      throw StrictCheckFailed(fmt::format("final depth MSE {:.4f} exceeds depth.strict_max_mse = {}", last,
                                          config.depth_strict_max_mse));
    }
  }
  return result;
}

// ------------------------------------------------------------------ evaluate

std::vector<fs::path> list_png_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

FeatureBatch features_for(const fs::path& source, const ExperimentConfig& c, const FeatureExtractor& extractor) {
  require_file(source, "translation-metrics image source");
  if (source.extension() == ".csv") return load_feature_csv(source);
  std::vector<Image> images;
  if (fs::is_directory(source)) {
    for (const auto& p : list_png_files(source)) images.push_back(read_png_image(p));
  } else {
    const DatasetManifest m = load_manifest(source);
    for (const auto& seq : m.sequences) {
      for (const auto& f : seq.frames) images.push_back(read_png_image(m.resolve(f)));
    }
  }
  if (c.data.preprocess) {
    for (auto& im : images) im = preprocess_frame(im, c.data.spec);
  }
  if (images.empty()) throw InputError(fmt::format("no images found in '{}'", source.string()));
  return extract_features(images, extractor);
}

TranslationMetrics translation_metrics(const FeatureBatch& real, const FeatureBatch& fake, const EvalConfig& e) {
  if (real.extractor_id != fake.extractor_id) {
    throw InputError(fmt::format("feature sets come from different extractors ('{}' vs '{}')", real.extractor_id,
                                 fake.extractor_id));
  }
  TranslationMetrics m;
  m.extractor_id = real.extractor_id;
  m.fid = fid(real.features, fake.features);
  const auto k = kid(real.features, fake.features, {e.kid_subset_size, e.kid_subsets, e.extractor_seed});
  m.kid_mean = k.mean;
  m.kid_std = k.std;
  return m;
}

}  // namespace

json cmd_evaluate(ExperimentConfig config, bool quiet) {
  auto& ec = config.evaluate;
  if (ec.manifest.empty()) ec.manifest = config.eval_manifest;
  const bool do_depth = !ec.checkpoint.empty() || ec.inject_gt || !ec.translation_metrics;
  if (do_depth && !ec.inject_gt && ec.checkpoint.empty()) ec.checkpoint = config.output_dir / "checkpoints" / "depth.ckpt";
  if (do_depth) {
    require_file(ec.manifest, "evaluation manifest");
    if (!ec.inject_gt) require_file(ec.checkpoint, "depth checkpoint");
  }
  if (ec.translation_metrics) {
    require_file(ec.images_real, "evaluate.images_real");
    require_file(ec.images_fake, "evaluate.images_fake");
  }
  auto ctx = begin_command(config, "evaluate", quiet);

  json report;
  report["config_hash"] = config_hash(config);
  report["dataset"] = nullptr;
  report["model_id"] = nullptr;
  report["extractor_id"] = nullptr;
  report["depth"] = nullptr;
  report["translation"] = nullptr;

  if (do_depth) {
    const DatasetManifest manifest = load_manifest(ec.manifest);
    const auto frames = load_paired(manifest, load_options(config));
    if (frames.empty()) throw InputError("evaluation manifest has no frames");
    report["dataset"] = manifest.dataset_name;
    std::optional<LoadedDepthModel> model;
    if (ec.inject_gt) {
      report["model_id"] = "ground_truth";
    } else {
      model = load_depth_checkpoint(ec.checkpoint);
      model->model->eval();
      report["model_id"] = fmt::format("{}:{}", ec.checkpoint.filename().string(), file_digest(ec.checkpoint));
    }
    DatasetManifest preds;
    preds.dataset_name = manifest.dataset_name + "_predictions";
    preds.domain = Domain::A;
    preds.depth_scale_mm = kPredictionDepthScale;
    preds.base_dir = ctx.run.images();
    std::vector<DepthMetrics> per_frame;
    json rows = json::array();
    std::string csv = "sequence_id,frame_index,rmse,abs_rel,delta1,delta2,delta3\n";
    for (const auto& f : frames) {
      const DepthMap pred = ec.inject_gt ? f.depth
                                         : predict_depth(model->model, f.image, model->config.inference_width,
                                                         model->config.inference_height);
      const DepthMetrics m = depth_metrics(median_rescale(pred, f.depth), f.depth);
      per_frame.push_back(m);
      json row = to_json(m);
      row["sequence_id"] = f.sequence_id;
      row["frame_index"] = f.frame_index;
      rows.push_back(row);
      csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", csv_field(f.sequence_id), f.frame_index,
                         m.rmse, m.abs_rel, m.delta1, m.delta2, m.delta3);

      if (preds.sequences.empty() || preds.sequences.back().sequence_id != f.sequence_id) {
        preds.sequences.push_back({f.sequence_id, {}, {}});
      }
      const auto& src_seq = *std::find_if(manifest.sequences.begin(), manifest.sequences.end(),
                                          [&](const auto& s) { return s.sequence_id == f.sequence_id; });
      const std::string rel = fmt::format("predictions/{}/{}.png", f.sequence_id, ordinal_name(f.frame_index));
      fs::create_directories((preds.base_dir / rel).parent_path());
      write_depth_png(preds.base_dir / rel, pred, kPredictionDepthScale);
      preds.sequences.back().frames.push_back(manifest.resolve(src_seq.frames[static_cast<std::size_t>(f.frame_index)]).string());
      preds.sequences.back().depths.push_back(rel);
    }
    save_manifest(preds, ctx.run.images() / "predictions.json");
    const DepthMetrics agg = mean_metrics(per_frame);
    report["depth"] = {{"aggregate", to_json(agg)},
                       {"aggregation", "mean_of_per_frame"},
                       {"rescaling", "per_frame_median"},
                       {"n_frames", per_frame.size()},
                       {"per_frame", rows}};
    write_text_atomic(ctx.run.metrics() / "per_frame.csv", csv);
    ctx.log->info("{} frames: RMSE {:.4f} mm, AbsRel {:.4f}, d1 {:.4f}", per_frame.size(), agg.rmse, agg.abs_rel,
                  agg.delta1);
  }

  if (ec.translation_metrics) {
    const RandomConvExtractor extractor(config.eval.extractor_seed);
    const auto real = features_for(ec.images_real, config, extractor);
    const auto fake = features_for(ec.images_fake, config, extractor);
    const auto tm = translation_metrics(real, fake, config.eval);
    report["extractor_id"] = tm.extractor_id;
    report["translation"] = to_json(tm);
    ctx.log->info("FID {:.6f}, KID {:.6f} +- {:.6f} ({})", tm.fid, tm.kid_mean, tm.kid_std, tm.extractor_id);
  }
  write_text_atomic(ctx.run.metrics() / "metrics.json", report.dump(2) + "\n");
  return report;
}

// -------------------------------------------------------------- compare-grid

int cmd_compare_grid(const ExperimentConfig& config, bool quiet) {
  const auto& gc = config.grid;
  require_file(gc.frames, "grid.frames manifest");
  if (gc.models.empty()) throw InputError("grid.models is empty; pass at least one label=path");
  struct Source {
    std::string label;
    std::optional<DatasetManifest> manifest;
    std::optional<LoadedDepthModel> model;
  };
  std::vector<Source> sources;
  for (const auto& entry : gc.models) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw InputError(fmt::format("grid model '{}' needs the form label=path", entry));
    Source s{entry.substr(0, eq), std::nullopt, std::nullopt};
    const fs::path p = entry.substr(eq + 1);
    require_file(p, "grid model source");
    if (p.extension() == ".ckpt") {
      s.model = load_depth_checkpoint(p);
      s.model->model->eval();
    } else {
      s.manifest = load_manifest(p);
    }
    sources.push_back(std::move(s));
  }
  const DatasetManifest frames = load_manifest(gc.frames);
  auto ctx = begin_command(config, "compare-grid", quiet);
  const fs::path out_dir = ctx.run.images() / "grids";
  fs::create_directories(out_dir);
  int written = 0, seen = 0;
  for (const auto& seq : frames.sequences) {
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
      if (gc.max_frames > 0 && seen >= gc.max_frames) break;
      ++seen;
      const fs::path img_path = frames.resolve(seq.frames[i]);
      if (!fs::exists(img_path)) {
        ctx.log->warn("skipping {}[{}]: missing frame {}", seq.sequence_id, i, img_path.string());
        continue;
      }
      Image input = read_png_image(img_path);
      if (config.data.preprocess) input = preprocess_frame(input, config.data.spec);
      std::vector<std::pair<std::string, DepthMap>> panels;
      std::string missing;
      for (auto& s : sources) {
        if (s.model) {
          panels.emplace_back(s.label, predict_depth(s.model->model, input, s.model->config.inference_width,
                                                     s.model->config.inference_height));
          continue;
        }
        const auto it = std::find_if(s.manifest->sequences.begin(), s.manifest->sequences.end(),
                                     [&](const auto& m) { return m.sequence_id == seq.sequence_id; });
        if (it == s.manifest->sequences.end() || i >= it->depths.size() || !fs::exists(s.manifest->resolve(it->depths[i]))) {
          missing = s.label;
          break;
        }
        panels.emplace_back(s.label, read_depth_png(s.manifest->resolve(it->depths[i]), s.manifest->depth_scale_mm));
      }
      if (!missing.empty()) {
        ctx.log->warn("skipping {}[{}]: no prediction from '{}'", seq.sequence_id, i, missing);
        continue;
      }
      comparison_grid(input, "Input", panels)
          .save_png(out_dir / fmt::format("{}_{}.png", seq.sequence_id, ordinal_name(static_cast<int>(i))));
      ++written;
    }
  }
  ctx.log->info("wrote {} grids to {}", written, out_dir.string());
  return written;
}

// ------------------------------------------------------------ ablation-suite

json to_json(const AblationRow& r) {
  return {{"cell", r.cell},         {"ablation_id", r.ablation_id}, {"seed", r.seed},
          {"lambda_mi", r.lambda_mi}, {"domain_b", r.domain_b},     {"status", r.status},
          {"error", r.error},       {"depth", to_json(r.depth)},    {"mi_hard", r.mi_hard},
          {"fid_b", r.fid_b},       {"kid_b_mean", r.kid_b_mean},   {"kid_b_std", r.kid_b_std}};
}

namespace {

AblationRow run_cell(ExperimentConfig cell, const std::string& name, bool quiet) {
  AblationRow row;
  row.cell = name;
  row.ablation_id = std::string(to_string(cell.ablation_id));
  row.seed = cell.seed;
  row.lambda_mi = cell.ablation_id == AblationId::Baseline ? 0.0 : cell.translation.weights.lambda_mi;
  row.domain_b = cell.domain_b.string();
  try {
    if (cell.ablation_id == AblationId::Baseline) {
      cell.depth_train_manifest = cell.domain_a;
    } else {
      cmd_train_translate(cell, {false, quiet});
      cell.translate_dataset.checkpoint = cell.output_dir / "checkpoints" / "G.ckpt";
      cell.translate_dataset.manifest = cell.domain_a;
      cell.depth_train_manifest = cmd_translate_dataset(cell, quiet);
    }
    cmd_train_depth(cell, {false, false, quiet});
    cell.evaluate.checkpoint = cell.output_dir / "checkpoints" / "depth.ckpt";
    cell.evaluate.manifest = cell.eval_manifest;
    const json report = cmd_evaluate(cell, quiet);
    const auto& agg = report.at("depth").at("aggregate");
    row.depth = {agg.at("rmse"), agg.at("abs_rel"), agg.at("delta1"), agg.at("delta2"), agg.at("delta3")};

    // Structure and realism of the images the depth model was trained on.
    const auto train_pairs = load_pairs(cell.depth_train_manifest, cell, "depth training manifest");
    HistogramSpec mi_spec = cell.histogram;
    mi_spec.n_bins = cell.eval.mi_bins;
    row.mi_hard = mean_hard_mi(train_pairs, mi_spec);
    const RandomConvExtractor extractor(cell.eval.extractor_seed);
    const auto b = load_unpaired_set(cell.domain_b, cell, "domain-B manifest");
    const auto tm = translation_metrics(extract_features(images_of(b), extractor),
                                        extract_features(images_of(train_pairs), extractor), cell.eval);
    row.fid_b = tm.fid;
    row.kid_b_mean = tm.kid_mean;
    row.kid_b_std = tm.kid_std;
    write_text_atomic(cell.output_dir / "metrics" / "cell.json", to_json(row).dump(2) + "\n");
  } catch (const std::exception& e) {
    row.status = "failed";
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::vector<AblationRow> cmd_ablation_suite(const ExperimentConfig& config, bool quiet) {
  require_file(config.domain_a, "domain-A manifest");
  require_file(config.domain_b, "domain-B manifest");
  require_file(config.eval_manifest, "evaluation manifest");
  auto ctx = begin_command(config, "ablation-suite", quiet);
  const std::vector<std::uint64_t> seeds = config.ablation.seeds.empty() ? std::vector<std::uint64_t>{config.seed}
                                                                          : config.ablation.seeds;
  struct Plan {
    std::string name;
    ExperimentConfig cell;
  };
  std::vector<Plan> plans;
  for (std::uint64_t seed : seeds) {
    auto add = [&](AblationId id, const std::string& name, const fs::path& domain_b) {
      ExperimentConfig c = config;
      c.ablation_id = id;
      c.seed = seed;
      c.domain_b = domain_b;
      c.output_dir = config.output_dir / "cells" / fmt::format("{}_s{}", name, seed);
      c.translate_dataset = {};
      c.evaluate = {};
      c.depth_train_manifest.clear();
      c.finalize();
      plans.push_back({name, std::move(c)});
    };
    for (const auto& cell : config.ablation.cells) add(ablation_from_string(cell), cell, config.domain_b);
    for (const auto& alt : config.ablation.alt_domain_b) {
      require_file(alt, "alternative domain-B manifest");
      add(AblationId::OursAltB, "ours_altB_" + alt.stem().string(), alt);
    }
  }
  ctx.log->info("{} cells over {} seed(s)", plans.size(), seeds.size());

  std::vector<AblationRow> rows(plans.size());
  if (config.ablation.parallel) {
    std::vector<std::future<AblationRow>> futures;
    for (const auto& p : plans) futures.push_back(std::async(std::launch::async, run_cell, p.cell, p.name, true));
    for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < plans.size(); ++i) {
      ctx.log->info("cell {} (seed {})", plans[i].name, plans[i].cell.seed);
      rows[i] = run_cell(plans[i].cell, plans[i].name, quiet);
    }
  }

  std::string csv = "cell,ablation_id,seed,lambda_mi,status,rmse,abs_rel,delta1,delta2,delta3,mi_hard,fid_b,"
                    "kid_b_mean,kid_b_std,domain_b,error\n";
  json table = json::array();
  for (const auto& r : rows) {
    if (r.status != "ok") ctx.log->error("cell {} seed {} failed: {}", r.cell, r.seed, r.error);
    else ctx.log->info("cell {} seed {}: RMSE {:.4f} MI {:.4f} FID {:.4f}", r.cell, r.seed, r.depth.rmse, r.mi_hard, r.fid_b);
    csv += fmt::format("{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n",
                       csv_field(r.cell), r.ablation_id, r.seed, r.lambda_mi, r.status, r.depth.rmse, r.depth.abs_rel,
                       r.depth.delta1, r.depth.delta2, r.depth.delta3, r.mi_hard, r.fid_b, r.kid_b_mean, r.kid_b_std,
                       csv_field(r.domain_b), csv_field(r.error));
    table.push_back(to_json(r));
  }
  write_text_atomic(ctx.run.metrics() / "ablation.csv", csv);
  write_text_atomic(ctx.run.metrics() / "ablation.json",
                    json{{"config_hash", config_hash(config)}, {"rows", table}}.dump(2) + "\n");
  return rows;
}

}  // namespace sim2real
