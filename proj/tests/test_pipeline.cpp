#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "papc/papc.hpp"
#include "support/synth.hpp"

using namespace papc;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig quick_config() {
  PipelineConfig cfg;
  cfg.seed = 7;
  cfg.jobs = 2;
  cfg.mlp.epochs = 120;
  cfg.mlp.hidden = {24, 16};
  cfg.diarize.seed = cfg.seed;
  cfg.mlp.seed = cfg.seed;
  return cfg;
}

// Shared tiny corpus: one clip per (mood, env) pair for 10 moods worth.
struct Corpus {
  fs::path dir;
  fs::path manifest_mood;
  fs::path manifest_env;
};

const Corpus& tiny_corpus() {
  static Corpus corpus = [] {
    Corpus c;
    c.dir = fresh_dir("papc_tiny_corpus");
    std::ofstream mm((c.dir / "mood.csv").string());
    std::ofstream me((c.dir / "env.csv").string());
    mm << "path,label,split\n";
    me << "path,label,split\n";
    int idx = 0;
    for (int rep = 0; rep < 3; ++rep) {
      for (int mood = 0; mood < 5; ++mood) {
        const int env = (mood + rep) % 3;
        const auto clip = synth::make_mood_clip(static_cast<synth::Mood>(mood),
                                                static_cast<synth::Env>(env),
                                                1000 + 31 * idx, 3.0);
        const std::string name = "clip" + std::to_string(idx) + ".wav";
        write_wav((c.dir / name).string(), clip);
        const char* split = rep == 2 ? "test" : "train";
        mm << name << ',' << mood_label_names()[mood] << ',' << split << '\n';
        me << name << ',' << environment_label_names()[env] << ',' << split << '\n';
        ++idx;
      }
    }
    c.manifest_mood = c.dir / "mood.csv";
    c.manifest_env = c.dir / "env.csv";
    return c;
  }();
  return corpus;
}

}  // namespace

TEST_CASE("config loader rejects unknown keys at any level") {
  CHECK_THROWS_MATCHES(pipeline_config_from_json(nlohmann::json::parse(R"({"sead": 3})")),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ConfigError;
                       }));
  CHECK_THROWS_MATCHES(pipeline_config_from_json(
                           nlohmann::json::parse(R"({"vad": {"threshold": 5}})")),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ConfigError;
                       }));
  CHECK_THROWS_MATCHES(pipeline_config_from_json(
                           nlohmann::json::parse(R"({"features": {"jitter_divisor": "N"}})")),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ConfigError;
                       }));
  CHECK_THROWS_MATCHES(pipeline_config_from_json(nlohmann::json::parse(R"({"jobs": "two"})")),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ConfigError;
                       }));
}

TEST_CASE("config values land in the right places") {
  const auto j = nlohmann::json::parse(R"({
    "seed": 99,
    "jobs": 3,
    "vad": {"threshold_db": 4.5, "hangover_frames": 5},
    "denoise": {"gain_floor_db": -20.0},
    "diarize": {"min_turn_frames": 30},
    "features": {"keep": 50, "jitter_divisor": "M-1"},
    "tree": {"max_depth": 6},
    "mlp": {"hidden": [10, 10], "epochs": 42}
  })");
  const PipelineConfig cfg = pipeline_config_from_json(j);
  CHECK(cfg.seed == 99);
  CHECK(cfg.jobs == 3);
  CHECK(cfg.vad.threshold_db == 4.5);
  CHECK(cfg.vad.hangover_frames == 5);
  CHECK(cfg.denoise.gain_floor_db == -20.0);
  CHECK(cfg.diarize.min_turn_frames == 30);
  CHECK(cfg.features.keep == 50);
  CHECK(cfg.features.jitter_divisor == JitterDivisor::MMinus1);
  CHECK(cfg.tree.max_depth == 6);
  CHECK(cfg.mlp.hidden == std::vector<int>{10, 10});
  CHECK(cfg.mlp.epochs == 42);
  CHECK(cfg.diarize.seed == 99);     // global seed propagates
  CHECK(cfg.mlp.seed == 99);
  CHECK(cfg.features.pitch.vad.threshold_db == 4.5);
}

TEST_CASE("exit codes map by error class") {
  CHECK(exit_code_for(ErrorCode::NoInputs) == 2);
  CHECK(exit_code_for(ErrorCode::ConfigError) == 3);
  CHECK(exit_code_for(ErrorCode::ModelMissing) == 4);
  CHECK(exit_code_for(ErrorCode::MalformedWav) == 1);
}

TEST_CASE("manifest rows are validated with their line numbers") {
  const fs::path dir = fresh_dir("papc_manifest");
  {
    std::ofstream f((dir / "bad_label.csv").string());
    f << "path,label,split\n";
    f << "a.wav,laugh,train\n";
    f << "b.wav,shout,train\n";
  }
  CHECK_THROWS_MATCHES(load_manifest((dir / "bad_label.csv").string(), mood_label_names()),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ManifestMalformed &&
                                std::string(e.what()).find("line 3") != std::string::npos &&
                                std::string(e.what()).find("shout") != std::string::npos;
                       }));
  {
    std::ofstream f((dir / "bad_split.csv").string());
    f << "path,label,split\n";
    f << "a.wav,laugh,validation\n";
  }
  CHECK_THROWS(load_manifest((dir / "bad_split.csv").string(), mood_label_names()));
  {
    std::ofstream f((dir / "bad_header.csv").string());
    f << "file,label\n";
  }
  CHECK_THROWS(load_manifest((dir / "bad_header.csv").string(), mood_label_names()));
  {
    std::ofstream f((dir / "good.csv").string());
    f << "path,label,split\n";
    f << "a.wav,indoor,train\n";
    f << "/abs/b.wav,outdoor,test\n";
  }
  const auto rows = load_manifest((dir / "good.csv").string(), environment_label_names());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].path == (dir / "a.wav").string());  // relative to the manifest
  CHECK(rows[1].path == "/abs/b.wav");
  CHECK(rows[1].is_test);
}

TEST_CASE("analyze fails cleanly without inputs or models") {
  const fs::path empty = fresh_dir("papc_empty");
  const fs::path out = fresh_dir("papc_out0");
  CHECK_THROWS_MATCHES(run_analyze(empty.string(), empty.string(), out.string(), quick_config()),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::NoInputs;
                       }));
  // WAVs exist but the model directory is empty
  const auto clip = synth::make_mood_clip(synth::Mood::Sing, synth::Env::Indoor, 5, 2.5);
  write_wav((empty / "x.wav").string(), clip);
  CHECK_THROWS_MATCHES(run_analyze(empty.string(), out.string(), out.string(), quick_config()),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ModelMissing;
                       }));
}

TEST_CASE("train, analyze, evaluate, and isolate per-clip failures") {
  const Corpus& corpus = tiny_corpus();
  const fs::path models = fresh_dir("papc_models");
  const PipelineConfig cfg = quick_config();

  // --- training honors the split exactly
  const TrainResult tree_res =
      run_train(TrainMode::Tree, corpus.manifest_env.string(), models.string(), cfg);
  CHECK(fs::exists(tree_res.model_path));
  CHECK(tree_res.metrics.n == 5);  // five test rows in the manifest

  const TrainResult mlp_res =
      run_train(TrainMode::Mlp, corpus.manifest_mood.string(), models.string(), cfg);
  CHECK(fs::exists(mlp_res.model_path));
  CHECK(mlp_res.metrics.n == 5);

  // --- evaluate uses the stored models on the test rows
  const Metrics ev = run_evaluate(TrainMode::Mlp, corpus.manifest_mood.string(),
                                  models.string(), cfg);
  CHECK(ev.n == 5);

  // --- analysis directory: 4 corpus clips + a silent clip
  const fs::path in_dir = fresh_dir("papc_analyze_in");
  std::vector<std::string> names;
  for (int i = 0; i < 4; ++i) {
    const auto clip = synth::make_mood_clip(static_cast<synth::Mood>(i),
                                            static_cast<synth::Env>(i % 3), 9000 + i, 3.0);
    const std::string name = "in" + std::to_string(i) + ".wav";
    write_wav((in_dir / name).string(), clip);
    names.push_back(name);
  }
  AudioClip silent;
  silent.sample_rate_hz = kSampleRateHz;
  silent.samples.assign(2 * kSampleRateHz, 0.0);
  write_wav((in_dir / "silent.wav").string(), silent);

  const fs::path out1 = fresh_dir("papc_analyze_out1");
  const AnalyzeResult res = run_analyze(in_dir.string(), models.string(), out1.string(), cfg);
  REQUIRE(res.records.size() == 5);
  CHECK(fs::exists(res.records_path));
  CHECK(fs::exists(res.summary_path));

  // silent clip: warning, no mood, no csne
  const AnalysisRecord* silent_rec = nullptr;
  for (const auto& r : res.records)
    if (r.source_id.find("silent") != std::string::npos) silent_rec = &r;
  REQUIRE(silent_rec != nullptr);
  CHECK_FALSE(silent_rec->warnings.empty());
  CHECK_FALSE(silent_rec->has_clip_mood);
  CHECK_FALSE(silent_rec->has_csne);

  // every analyzed record has sane ranges
  for (const auto& r : res.records) {
    CHECK(r.speech_fraction >= 0.0);
    CHECK(r.speech_fraction <= 1.0);
    if (r.has_csne) {
      CHECK(r.csne_db <= 100.0);
      CHECK(r.csne_db >= -100.0);
    }
    for (const auto& s : r.segments)
      if (s.has_mood) CHECK(s.mood_probs.size() == 5);
  }

  // summary tallies equal a direct recount of the emitted records
  std::vector<int> env_counts(3, 0), mood_counts(5, 0);
  for (const auto& r : res.records) {
    if (r.has_environment) ++env_counts[static_cast<int>(r.environment)];
    if (r.has_clip_mood) ++mood_counts[static_cast<int>(r.clip_mood)];
  }
  std::ifstream sm(res.summary_path);
  std::string line;
  std::getline(sm, line);
  CHECK(line == "metric,value");
  while (std::getline(sm, line)) {
    const auto comma = line.find(',');
    const std::string key = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    for (int i = 0; i < 3; ++i)
      if (key == "environment_" + environment_label_names()[i])
        CHECK(value == std::to_string(env_counts[i]));
    for (int i = 0; i < 5; ++i)
      if (key == "mood_" + mood_label_names()[i])
        CHECK(value == std::to_string(mood_counts[i]));
    if (key == "clips") CHECK(value == "5");
  }

  // --- corrupting one file changes only that file's record
  {
    std::ofstream bad((in_dir / names[1]).string(), std::ios::binary);
    bad << "not a wav at all";
  }
  const fs::path out2 = fresh_dir("papc_analyze_out2");
  const AnalyzeResult res2 = run_analyze(in_dir.string(), models.string(), out2.string(), cfg);
  REQUIRE(res2.records.size() == 5);
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto a = record_to_json(res.records[i]).dump();
    const auto b = record_to_json(res2.records[i]).dump();
    if (res.records[i].source_id.find(names[1]) != std::string::npos) {
      CHECK(a != b);
      CHECK_FALSE(res2.records[i].warnings.empty());
    } else {
      CHECK(a == b);
    }
  }
}

TEST_CASE("debug mode traces the chain in stage order") {
  const Corpus& corpus = tiny_corpus();
  const fs::path models = fresh_dir("papc_models_dbg");
  PipelineConfig cfg = quick_config();
  (void)run_train(TrainMode::Tree, corpus.manifest_env.string(), models.string(), cfg);
  (void)run_train(TrainMode::Mlp, corpus.manifest_mood.string(), models.string(), cfg);

  cfg.debug = true;
  const DecisionTree tree = tree_from_json(load_json((models / "tree.json").string()));
  const MlpModel mlp = mlp_from_json(load_json((models / "mlp.json").string()));
  const AnalysisRecord rec =
      analyze_clip((corpus.dir / "clip0.wav").string(), cfg, &tree, &mlp);
  const std::vector<std::string> expect = {"load",    "canonicalize", "vad",
                                           "suppress_silence", "denoise", "csne",
                                           "environment", "diarize", "features", "mood"};
  REQUIRE(rec.stage_trace == expect);
}

TEST_CASE("feature dump emits clip and segment rows") {
  const Corpus& corpus = tiny_corpus();
  const fs::path out = fresh_dir("papc_features_out");
  const FeatureDumpResult res =
      run_features(corpus.dir.string(), out.string(), quick_config());
  CHECK(res.rows >= 15);  // at least one clip row per input
  std::ifstream csv(res.csv_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header.find("source_id,scope,start_s,end_s,jitter_abs_s") == 0);
  std::size_t csv_rows = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++csv_rows;
  CHECK(csv_rows == res.rows);
  std::ifstream nd(res.ndjson_path);
  std::size_t nd_rows = 0;
  while (std::getline(nd, line))
    if (!line.empty()) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.contains("curated"));
      ++nd_rows;
    }
  CHECK(nd_rows == res.rows);
}

TEST_CASE("CLI drives the full train and analyze flow") {
  const Corpus& corpus = tiny_corpus();
  const std::string cli = PAPC_CLI_PATH;
  const fs::path models = fresh_dir("papc_cli_models");
  const fs::path out = fresh_dir("papc_cli_run");

  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };

  CHECK(run("train-tree --manifest " + corpus.manifest_env.string() + " --out " +
            models.string() + " --seed 7") == 0);
  CHECK(run("train-mlp --manifest " + corpus.manifest_mood.string() + " --out " +
            models.string() + " --seed 7") == 0);
  CHECK(fs::exists(models / "tree.json"));
  CHECK(fs::exists(models / "mlp.json"));
  CHECK(run("analyze --input " + corpus.dir.string() + " --models " + models.string() +
            " --out " + out.string() + " --seed 7 --jobs 2") == 0);
  CHECK(fs::exists(out / "records.ndjson"));
  CHECK(fs::exists(out / "summary.csv"));
  std::ifstream nd((out / "records.ndjson").string());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(nd, line))
    if (!line.empty()) {
      const auto j = nlohmann::json::parse(line);  // every record is valid JSON
      CHECK(j.contains("source_id"));
      ++lines;
    }
  CHECK(lines == 15);
  CHECK(run("evaluate --manifest " + corpus.manifest_mood.string() + " --models " +
            models.string() + " --kind mlp --out " + out.string()) == 0);
  CHECK(fs::exists(out / "metrics_mlp.json"));
}

TEST_CASE("CLI exit codes follow the contract") {
  const std::string cli = PAPC_CLI_PATH;
  const fs::path empty = fresh_dir("papc_cli_empty");
  const fs::path out = fresh_dir("papc_cli_out");

  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("analyze --input " + empty.string() + " --models " + empty.string() + " --out " +
            out.string()) == 2);

  const fs::path cfg_path = empty / "bad.json";
  {
    std::ofstream f(cfg_path.string());
    f << R"({"unknown_key": 1})";
  }
  CHECK(run("features --input " + empty.string() + " --out " + out.string() + " --config " +
            cfg_path.string()) == 3);

  // model dir missing while inputs exist
  const auto clip = synth::make_mood_clip(synth::Mood::Laugh, synth::Env::Indoor, 77, 2.5);
  write_wav((empty / "a.wav").string(), clip);
  CHECK(run("analyze --input " + empty.string() + " --models " + out.string() + " --out " +
            out.string()) == 4);

  CHECK(run("features --input " + empty.string() + " --out " + out.string()) == 0);
}
