// papc: batch audio analysis over directories of WAV clips.
//
// Verbs: analyze, train-tree, train-mlp, evaluate, features.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "papc/papc.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string input;
  std::string models;
  std::string out = "out";
  std::string manifest;
  std::string kind;
  long seed = -1;
  int jobs = 0;
  bool debug = false;
};

papc::PipelineConfig resolve_config(const CommonArgs& args) {
  papc::PipelineConfig cfg;
  if (!args.config.empty()) cfg = papc::load_pipeline_config(args.config);
  if (args.seed >= 0) {
    cfg.seed = static_cast<unsigned>(args.seed);
    cfg.diarize.seed = cfg.seed;
    cfg.mlp.seed = cfg.seed;
  }
  if (args.jobs > 0) cfg.jobs = args.jobs;
  if (args.debug) cfg.debug = true;
  return cfg;
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "pipeline config JSON");
  sub->add_option("--seed", args.seed, "RNG seed override");
  sub->add_option("--jobs", args.jobs, "worker threads for clip-level parallelism");
  sub->add_flag("--debug", args.debug, "emit per-clip stage traces");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psychological audio processing chain"};
  app.require_subcommand(1);
  CommonArgs args;

  CLI::App* analyze = app.add_subcommand("analyze", "run the full chain over a directory");
  analyze->add_option("--input", args.input, "directory of WAV files")->required();
  analyze->add_option("--models", args.models, "directory holding tree.json and mlp.json")
      ->required();
  analyze->add_option("--out", args.out, "output directory");
  add_common(analyze, args);

  CLI::App* train_tree = app.add_subcommand("train-tree", "train the environment classifier");
  train_tree->add_option("--manifest", args.manifest, "CSV of path,label,split")->required();
  train_tree->add_option("--out", args.out, "output directory");
  add_common(train_tree, args);

  CLI::App* train_mlp = app.add_subcommand("train-mlp", "train the mood classifier");
  train_mlp->add_option("--manifest", args.manifest, "CSV of path,label,split")->required();
  train_mlp->add_option("--out", args.out, "output directory");
  add_common(train_mlp, args);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a stored model on test rows");
  evaluate->add_option("--manifest", args.manifest, "CSV of path,label,split")->required();
  evaluate->add_option("--models", args.models, "model directory")->required();
  evaluate->add_option("--kind", args.kind, "tree or mlp")->required();
  evaluate->add_option("--out", args.out, "output directory");
  add_common(evaluate, args);

  CLI::App* features = app.add_subcommand("features", "dump curated features only");
  features->add_option("--input", args.input, "directory of WAV files")->required();
  features->add_option("--out", args.out, "output directory");
  add_common(features, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const papc::PipelineConfig cfg = resolve_config(args);
    if (analyze->parsed()) {
      const auto result = papc::run_analyze(args.input, args.models, args.out, cfg);
      std::size_t warned = 0;
      for (const auto& rec : result.records)
        if (!rec.warnings.empty()) ++warned;
      std::cout << result.records.size() << " clips -> " << result.records_path << " ("
                << warned << " with warnings)\n";
      std::cout << "summary: " << result.summary_path << '\n';
    } else if (train_tree->parsed() || train_mlp->parsed()) {
      const auto mode =
          train_tree->parsed() ? papc::TrainMode::Tree : papc::TrainMode::Mlp;
      const auto result = papc::run_train(mode, args.manifest, args.out, cfg);
      const auto& labels = mode == papc::TrainMode::Tree
                               ? papc::environment_label_names()
                               : papc::mood_label_names();
      std::cout << "model: " << result.model_path << '\n';
      std::cout << papc::metrics_table(result.metrics, labels);
    } else if (evaluate->parsed()) {
      papc::TrainMode mode;
      if (args.kind == "tree")
        mode = papc::TrainMode::Tree;
      else if (args.kind == "mlp")
        mode = papc::TrainMode::Mlp;
      else
        throw papc::Error(papc::ErrorCode::ConfigError, "--kind must be tree or mlp");
      const auto metrics = papc::run_evaluate(mode, args.manifest, args.models, cfg);
      const auto& labels = mode == papc::TrainMode::Tree
                               ? papc::environment_label_names()
                               : papc::mood_label_names();
      std::filesystem::create_directories(args.out);
      const std::string path =
          (std::filesystem::path(args.out) /
           (mode == papc::TrainMode::Tree ? "metrics_tree.json" : "metrics_mlp.json"))
              .string();
      papc::save_json(path, papc::metrics_to_json(metrics, labels));
      std::cout << papc::metrics_table(metrics, labels);
      std::cout << "metrics: " << path << '\n';
    } else if (features->parsed()) {
      const auto result = papc::run_features(args.input, args.out, cfg);
      std::cout << result.rows << " feature rows -> " << result.csv_path << '\n';
    }
  } catch (const papc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return papc::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
