#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fmt/format.h>
#include <optional>
#include <string>
#include <vector>

#include "sim2real/config.hpp"
#include "sim2real/error.hpp"
#include "sim2real/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sim2real;

namespace {

// Flags shared by every subcommand. Each flag becomes a config override, so a
// flag always wins over the config file.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", config, "experiment config (TOML)");
    cmd->add_option("--set", sets, "override a config key: section.key=value (repeatable)");
    cmd->add_option("-o,--output-dir", output_dir, "run directory (relative paths honour S2R_OUTPUT_ROOT)");
    cmd->add_option("--seed", seed, "experiment seed");
    cmd->add_flag("-q,--quiet", quiet, "log to the run directory only");
  }

  void path(const std::string& key, const std::string& value) {
    if (!value.empty()) overrides.push_back(key + "=\"" + fs::absolute(value).lexically_normal().string() + "\"");
  }
  void raw(const std::string& key, const std::string& toml_value) { overrides.push_back(key + "=" + toml_value); }

  ExperimentConfig load() {
    std::vector<std::string> all = sets;
    all.insert(all.end(), overrides.begin(), overrides.end());
    if (!output_dir.empty()) all.push_back("experiment.output_dir=\"" + output_dir + "\"");
    if (seed) all.push_back(fmt::format("experiment.seed={}", *seed));
    if (!config.empty()) return load_experiment(config, all);
    TomlDocument doc;
    for (const auto& o : all) doc.apply_override(o);
    return experiment_from_toml(doc, fs::current_path());
  }
};

std::string toml_string(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sim2real: MI-constrained sim-to-real translation and depth estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SIM2REAL_CLI_VERSION);

  Common common;
  std::function<void()> run;

  // toy-data
  auto* toy = app.add_subcommand("toy-data", "render the procedural toy dataset and a toy experiment config");
  common.add_to(toy);
  std::optional<int> toy_pairs, toy_res, toy_eval;
  toy->add_option("--pairs", toy_pairs, "domain-A pairs (and domain-B frames)");
  toy->add_option("--resolution", toy_res, "square image side in pixels");
  toy->add_option("--eval-frames", toy_eval, "held-out style-B frames with depth");
  toy->callback([&] {
    if (toy_pairs) common.raw("toy.pairs", std::to_string(*toy_pairs));
    if (toy_res) common.raw("toy.resolution", std::to_string(*toy_res));
    if (toy_eval) common.raw("toy.eval_frames", std::to_string(*toy_eval));
    run = [&] {
      const auto out = cmd_toy_data(common.load(), common.quiet);
      fmt::print("{}\n", out.experiment.string());
    };
  });

  // train-translate
  auto* tt = app.add_subcommand("train-translate", "train G, F, D_A, D_B");
  common.add_to(tt);
  std::string ablation, domain_a, domain_b;
  std::optional<int> epochs;
  std::optional<double> lambda_mi;
  bool dump_hist = false;
  tt->add_option("--ablation", ablation, "baseline | ours | ours_cg | ours_altB");
  tt->add_option("--domain-a", domain_a, "domain-A manifest");
  tt->add_option("--domain-b", domain_b, "domain-B manifest");
  tt->add_option("--epochs", epochs, "translation epochs");
  tt->add_option("--lambda-mi", lambda_mi, "MI loss weight");
  tt->add_flag("--dump-histograms", dump_hist, "write joint-histogram heat maps at checkpoint epochs");
  tt->callback([&] {
    if (!ablation.empty()) common.raw("experiment.ablation_id", toml_string(ablation));
    common.path("experiment.domain_a", domain_a);
    common.path("experiment.domain_b", domain_b);
    if (epochs) common.raw("translation.epochs", std::to_string(*epochs));
    if (lambda_mi) common.raw("translation.lambda_mi", fmt::format("{}", *lambda_mi));
    run = [&] { cmd_train_translate(common.load(), {dump_hist, common.quiet}); };
  });

  // translate-dataset
  auto* td = app.add_subcommand("translate-dataset", "translate a domain-A dataset with an A->B generator");
  common.add_to(td);
  std::string td_ckpt, td_manifest;
  td->add_option("--checkpoint", td_ckpt, "generator checkpoint (default <run>/checkpoints/G.ckpt)");
  td->add_option("--manifest", td_manifest, "domain-A manifest (default experiment.domain_a)");
  td->callback([&] {
    common.path("translate_dataset.checkpoint", td_ckpt);
    common.path("translate_dataset.manifest", td_manifest);
    run = [&] { fmt::print("{}\n", cmd_translate_dataset(common.load(), common.quiet).string()); };
  });

  // train-depth
  auto* tdp = app.add_subcommand("train-depth", "train the depth model on a paired manifest");
  common.add_to(tdp);
  std::string dp_manifest, dp_ablation;
  std::optional<int> dp_epochs;
  bool resume = false, strict = false;
  tdp->add_option("--manifest", dp_manifest, "paired training manifest");
  tdp->add_option("--ablation", dp_ablation, "ablation id (baseline trains on domain_a)");
  tdp->add_option("--epochs", dp_epochs, "final epoch");
  tdp->add_flag("--resume", resume, "continue from <run>/checkpoints/depth.ckpt");
  tdp->add_flag("--strict", strict, "exit 1 when the final loss exceeds depth.strict_max_mse");
  tdp->callback([&] {
    common.path("depth.train_manifest", dp_manifest);
    if (!dp_ablation.empty()) common.raw("experiment.ablation_id", toml_string(dp_ablation));
    if (dp_epochs) common.raw("depth.epochs", std::to_string(*dp_epochs));
    run = [&] { cmd_train_depth(common.load(), {resume, strict, common.quiet}); };
  });

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "median-rescaled depth metrics and FID/KID");
  common.add_to(ev);
  std::string ev_ckpt, ev_manifest;
  std::vector<std::string> tm_sources;
  bool inject = false;
  ev->add_option("--checkpoint", ev_ckpt, "depth checkpoint");
  ev->add_option("--manifest", ev_manifest, "evaluation manifest with ground-truth depth");
  ev->add_flag("--inject-gt", inject, "use the ground truth as prediction (test mode)");
  ev->add_option("--translation-metrics", tm_sources, "REAL FAKE: folders, manifests or feature CSVs")->expected(2);
  ev->callback([&] {
    common.path("evaluate.checkpoint", ev_ckpt);
    common.path("evaluate.manifest", ev_manifest);
    if (inject) common.raw("evaluate.inject_gt", "true");
    if (!tm_sources.empty()) {
      common.raw("evaluate.translation_metrics", "true");
      common.path("evaluate.images_real", tm_sources[0]);
      common.path("evaluate.images_fake", tm_sources[1]);
    }
    run = [&] { fmt::print("{}\n", cmd_evaluate(common.load(), common.quiet).dump(2)); };
  });

  // compare-grid
  auto* cg = app.add_subcommand("compare-grid", "input | model depth panels, one PNG per frame");
  common.add_to(cg);
  std::string cg_frames;
  std::vector<std::string> cg_models;
  std::optional<int> cg_max;
  cg->add_option("--frames", cg_frames, "manifest of input frames");
  cg->add_option("--model", cg_models, "label=path to a prediction manifest or depth checkpoint (repeatable)");
  cg->add_option("--max-frames", cg_max, "limit the number of frames");
  cg->callback([&] {
    common.path("grid.frames", cg_frames);
    if (!cg_models.empty()) {
      std::string list = "[";
      for (std::size_t i = 0; i < cg_models.size(); ++i) {
        const auto eq = cg_models[i].find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--model", "expected label=path");
        const std::string entry =
            cg_models[i].substr(0, eq + 1) + fs::absolute(cg_models[i].substr(eq + 1)).lexically_normal().string();
        list += (i ? ", " : "") + toml_string(entry);
      }
      common.raw("grid.models", list + "]");
    }
    if (cg_max) common.raw("grid.max_frames", std::to_string(*cg_max));
    run = [&] { fmt::print("{} grids\n", cmd_compare_grid(common.load(), common.quiet)); };
  });

  // ablation-suite
  auto* ab = app.add_subcommand("ablation-suite", "run every ablation cell and tabulate depth metrics");
  common.add_to(ab);
  bool parallel = false;
  std::vector<std::uint64_t> seeds;
  ab->add_flag("--parallel", parallel, "run cells concurrently");
  ab->add_option("--seeds", seeds, "seeds to repeat every cell with");
  ab->callback([&] {
    if (parallel) common.raw("ablation.parallel", "true");
    if (!seeds.empty()) {
      std::string list = "[";
      for (std::size_t i = 0; i < seeds.size(); ++i) list += (i ? ", " : "") + std::to_string(seeds[i]);
      common.raw("ablation.seeds", list + "]");
    }
    run = [&] {
      const auto rows = cmd_ablation_suite(common.load(), common.quiet);
      int failed = 0;
      for (const auto& r : rows) {
        fmt::print("{:<24} seed {:<4} {:<7} rmse {:.4f} abs_rel {:.4f} d1 {:.4f} mi {:.4f} fid_b {:.4f}\n", r.cell,
                   r.seed, r.status, r.depth.rmse, r.depth.abs_rel, r.depth.delta1, r.mi_hard, r.fid_b);
        failed += r.status != "ok";
      }
      if (failed) std::fprintf(stderr, "%d cell(s) failed; see metrics/ablation.json\n", failed);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    run();
    return 0;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
