#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "papc/audio_io.hpp"
#include "papc/classify.hpp"
#include "papc/common.hpp"
#include "papc/denoise.hpp"
#include "papc/diarize.hpp"
#include "papc/dsp_core.hpp"
#include "papc/features.hpp"
#include "papc/vad.hpp"

namespace papc {

struct PipelineConfig {
  unsigned seed = 42;
  int jobs = 1;
  bool debug = false;
  VadConfig vad;
  DenoiseConfig denoise;
  DiarizeConfig diarize;
  FeaturesConfig features;
  TreeConfig tree;
  MlpConfig mlp;
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoInputs: return 2;
    case ErrorCode::ConfigError: return 3;
    case ErrorCode::ModelMissing: return 4;
    default: return 1;
  }
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const char* section,
                                std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw Error(ErrorCode::ConfigError,
                  std::string("unknown key '") + it.key() + "' in " + section);
  }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "'");
    }
  }
}

}  // namespace detail

// Strict config load: unknown keys anywhere are rejected.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  detail::reject_unknown_keys(
      j, "config root",
      {"seed", "jobs", "debug", "vad", "denoise", "diarize", "features", "tree", "mlp"});
  detail::read_if(j, "seed", cfg.seed);
  detail::read_if(j, "jobs", cfg.jobs);
  detail::read_if(j, "debug", cfg.debug);
  if (j.contains("vad")) {
    const auto& v = j.at("vad");
    detail::reject_unknown_keys(v, "vad",
                                {"noise_window_frames", "threshold_db", "hangover_frames",
                                 "energy_smooth_alpha", "epsilon"});
    detail::read_if(v, "noise_window_frames", cfg.vad.noise_window_frames);
    detail::read_if(v, "threshold_db", cfg.vad.threshold_db);
    detail::read_if(v, "hangover_frames", cfg.vad.hangover_frames);
    detail::read_if(v, "energy_smooth_alpha", cfg.vad.energy_smooth_alpha);
    detail::read_if(v, "epsilon", cfg.vad.epsilon);
  }
  if (j.contains("denoise")) {
    const auto& v = j.at("denoise");
    detail::reject_unknown_keys(
        v, "denoise",
        {"alpha_noise", "alpha_dd", "power_smooth_alpha", "presence_smooth_alpha",
         "presence_ratio_delta", "minima_window_frames", "gain_floor_db", "xi_min_db",
         "csne_cap_db", "gain_dump_path"});
    detail::read_if(v, "alpha_noise", cfg.denoise.alpha_noise);
    detail::read_if(v, "alpha_dd", cfg.denoise.alpha_dd);
    detail::read_if(v, "power_smooth_alpha", cfg.denoise.power_smooth_alpha);
    detail::read_if(v, "presence_smooth_alpha", cfg.denoise.presence_smooth_alpha);
    detail::read_if(v, "presence_ratio_delta", cfg.denoise.presence_ratio_delta);
    detail::read_if(v, "minima_window_frames", cfg.denoise.minima_window_frames);
    detail::read_if(v, "gain_floor_db", cfg.denoise.gain_floor_db);
    detail::read_if(v, "xi_min_db", cfg.denoise.xi_min_db);
    detail::read_if(v, "csne_cap_db", cfg.denoise.csne_cap_db);
    detail::read_if(v, "gain_dump_path", cfg.denoise.gain_dump_path);
  }
  if (j.contains("diarize")) {
    const auto& v = j.at("diarize");
    detail::reject_unknown_keys(v, "diarize",
                                {"min_turn_frames", "smooth_frames", "max_iter",
                                 "kmeans_iters", "separation_threshold"});
    detail::read_if(v, "min_turn_frames", cfg.diarize.min_turn_frames);
    detail::read_if(v, "smooth_frames", cfg.diarize.smooth_frames);
    detail::read_if(v, "max_iter", cfg.diarize.max_iter);
    detail::read_if(v, "kmeans_iters", cfg.diarize.kmeans_iters);
    detail::read_if(v, "separation_threshold", cfg.diarize.separation_threshold);
  }
  if (j.contains("features")) {
    const auto& v = j.at("features");
    detail::reject_unknown_keys(
        v, "features",
        {"keep", "jitter_divisor", "voicing_threshold", "f0_min_hz", "f0_max_hz"});
    detail::read_if(v, "keep", cfg.features.keep);
    if (v.contains("jitter_divisor")) {
      const std::string d = v.at("jitter_divisor").get<std::string>();
      if (d == "M")
        cfg.features.jitter_divisor = JitterDivisor::M;
      else if (d == "M-1")
        cfg.features.jitter_divisor = JitterDivisor::MMinus1;
      else
        throw Error(ErrorCode::ConfigError, "jitter_divisor must be 'M' or 'M-1'");
    }
    detail::read_if(v, "voicing_threshold", cfg.features.pitch.voicing_threshold);
    detail::read_if(v, "f0_min_hz", cfg.features.pitch.f0_min_hz);
    detail::read_if(v, "f0_max_hz", cfg.features.pitch.f0_max_hz);
  }
  if (j.contains("tree")) {
    const auto& v = j.at("tree");
    detail::reject_unknown_keys(v, "tree", {"max_depth", "min_leaf"});
    detail::read_if(v, "max_depth", cfg.tree.max_depth);
    detail::read_if(v, "min_leaf", cfg.tree.min_leaf);
  }
  if (j.contains("mlp")) {
    const auto& v = j.at("mlp");
    detail::reject_unknown_keys(v, "mlp",
                                {"hidden", "learning_rate", "epochs", "batch_size",
                                 "dropout", "momentum"});
    detail::read_if(v, "hidden", cfg.mlp.hidden);
    detail::read_if(v, "learning_rate", cfg.mlp.learning_rate);
    detail::read_if(v, "epochs", cfg.mlp.epochs);
    detail::read_if(v, "batch_size", cfg.mlp.batch_size);
    detail::read_if(v, "dropout", cfg.mlp.dropout);
    detail::read_if(v, "momentum", cfg.mlp.momentum);
  }
  cfg.features.pitch.vad = cfg.vad;
  cfg.diarize.seed = cfg.seed;
  cfg.mlp.seed = cfg.seed;
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad config JSON: ") + e.what());
  }
  return pipeline_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Per-clip record

struct SegmentRecord {
  SpeakerSegment segment;
  bool has_mood = false;
  MoodLabel mood = MoodLabel::Laugh;
  std::vector<double> mood_probs;
  double csne_db = 0.0;  // CSNE over just this segment's span
  CuratedFeatures curated;
};

struct AnalysisRecord {
  std::string source_id;
  double duration_s = 0.0;
  double speech_fraction = 0.0;
  bool has_csne = false;
  double csne_db = 0.0;
  bool has_environment = false;
  EnvironmentLabel environment = EnvironmentLabel::Indoor;
  double environment_confidence = 0.0;
  bool has_clip_features = false;
  CuratedFeatures clip_curated;
  std::vector<SegmentRecord> segments;
  bool has_clip_mood = false;
  MoodLabel clip_mood = MoodLabel::Laugh;
  std::vector<std::string> warnings;
  std::vector<std::string> stage_trace;  // populated in debug mode
};

namespace detail {

inline nlohmann::ordered_json curated_to_json(const CuratedFeatures& c) {
  nlohmann::ordered_json j;
  const auto names = CuratedFeatures::names();
  const auto values = c.to_vector();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
  j["spectral_centroid_hz"] = c.spectral_centroid * kBinHz;  // interpretability twin
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json record_to_json(const AnalysisRecord& r, bool debug = false) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["duration_s"] = r.duration_s;
  j["speech_fraction"] = r.speech_fraction;
  if (r.has_csne) j["csne_db"] = r.csne_db;
  if (r.has_environment) {
    j["environment"] = {{"label", environment_label_names()[static_cast<int>(r.environment)]},
                        {"confidence", r.environment_confidence}};
  }
  if (r.has_clip_mood)
    j["clip_mood"] = mood_label_names()[static_cast<int>(r.clip_mood)];
  if (r.has_clip_features) j["clip_features"] = detail::curated_to_json(r.clip_curated);
  nlohmann::ordered_json segs = nlohmann::ordered_json::array();
  for (const SegmentRecord& s : r.segments) {
    nlohmann::ordered_json sj;
    sj["speaker"] = s.segment.speaker_id == 0 ? "S1" : "S2";
    sj["start_frame"] = s.segment.start_frame;
    sj["end_frame"] = s.segment.end_frame;
    sj["start_s"] = static_cast<double>(s.segment.start_frame) * kHop / kSampleRateHz;
    sj["end_s"] =
        (static_cast<double>(s.segment.end_frame - 1) * kHop + kFrameLen) / kSampleRateHz;
    if (s.has_mood) {
      sj["mood"] = {{"label", mood_label_names()[static_cast<int>(s.mood)]},
                    {"probs", s.mood_probs}};
    }
    sj["csne_db"] = s.csne_db;
    sj["curated"] = detail::curated_to_json(s.curated);
    segs.push_back(std::move(sj));
  }
  j["segments"] = std::move(segs);
  j["warnings"] = r.warnings;
  if (debug) j["stages"] = r.stage_trace;
  return j;
}

// Environment tree input: CSNE plus a small LLD functional subset taken
// from the speech signal before enhancement (the noise carries the cue).
inline std::vector<double> make_environment_features(double csne_db_value,
                                                     const LldMatrix& lld) {
  auto functional = [&](const std::string& name) {
    for (std::size_t i = 0; i < lld.functional_names.size(); ++i)
      if (lld.functional_names[i] == name) return lld.functionals[i];
    throw Error(ErrorCode::DimensionMismatch, "missing LLD functional " + name);
  };
  return {csne_db_value,          functional("energy_mean"),   functional("energy_std"),
          functional("flatness_mean"), functional("centroid_mean"), functional("zcr_mean")};
}

inline const std::vector<std::string>& environment_feature_names() {
  static const std::vector<std::string> n = {"csne_db",       "energy_mean", "energy_std",
                                             "flatness_mean", "centroid_mean", "zcr_mean"};
  return n;
}

// ---------------------------------------------------------------------------
// The per-clip chain (Fig-style stage order; every failure becomes a warning).

struct ClipFeatures {
  bool ok = false;
  std::string source_id;
  std::string error;
  double csne_db = 0.0;
  std::vector<double> environment_features;  // 6-dim tree input
  std::vector<double> mood_features;         // DCT-truncated LLD + curated tail
  CuratedFeatures curated;
};

namespace detail {

struct ChainOutput {
  AudioClip canonical;
  VadDecision vad;
  AudioClip suppressed;
  AudioClip enhanced;
  double csne = 0.0;
};

// load -> canonicalize -> VAD -> silence suppression -> denoise -> CSNE
inline ChainOutput run_front_chain(const std::string& path, const PipelineConfig& cfg,
                                   std::vector<std::string>* trace) {
  auto stage = [&](const char* name) {
    if (trace) trace->push_back(name);
  };
  ChainOutput out;
  stage("load");
  const AudioClip raw = load_wav(path);
  stage("canonicalize");
  out.canonical = canonicalize(raw);
  stage("vad");
  const FrameSeries frames = frame_signal(out.canonical, Window::Rect);
  out.vad = detect_speech(frames, cfg.vad);
  stage("suppress_silence");
  out.suppressed = suppress_silence(out.canonical, out.vad);
  stage("denoise");
  out.enhanced = denoise_clip(out.suppressed, cfg.denoise);
  stage("csne");
  out.csne = csne_db(out.suppressed, out.enhanced, cfg.denoise.csne_cap_db);
  return out;
}

}  // namespace detail

// Feature extraction shared by training and evaluation runs.
inline ClipFeatures extract_clip_features(const std::string& path, const PipelineConfig& cfg,
                                          std::size_t keep_override = 0) {
  ClipFeatures out;
  out.source_id = path;
  try {
    auto chain = detail::run_front_chain(path, cfg, nullptr);
    out.csne_db = chain.csne;
    const LldMatrix env_lld = extract_lld(chain.suppressed, cfg.features);
    out.environment_features = make_environment_features(chain.csne, env_lld);
    out.curated = compute_curated(chain.enhanced, cfg.features);
    const LldMatrix lld = extract_lld(chain.enhanced, cfg.features);
    const std::size_t keep =
        keep_override > 0 ? keep_override : effective_keep(cfg.features, lld);
    out.mood_features = assemble_feature_vector(out.curated, lld, keep);
    out.ok = true;
  } catch (const Error& e) {
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// Full analysis of a single clip. Model pointers may be null, in which case
// the corresponding stage is skipped with a warning.
inline AnalysisRecord analyze_clip(const std::string& path, const PipelineConfig& cfg,
                                   const DecisionTree* tree, const MlpModel* mlp) {
  AnalysisRecord rec;
  rec.source_id = path;
  auto stage = [&](const char* name) {
    if (cfg.debug) rec.stage_trace.push_back(name);
  };
  detail::ChainOutput chain;
  try {
    chain = detail::run_front_chain(path, cfg, cfg.debug ? &rec.stage_trace : nullptr);
  } catch (const Error& e) {
    rec.warnings.push_back(e.what());
    return rec;
  } catch (const std::exception& e) {
    rec.warnings.push_back(e.what());
    return rec;
  }
  rec.duration_s = chain.canonical.duration_s();
  rec.speech_fraction = static_cast<double>(chain.vad.speech_frame_count()) /
                        static_cast<double>(chain.vad.speech_flags.size());
  rec.has_csne = true;
  rec.csne_db = chain.csne;

  std::size_t mood_keep = 0;
  if (mlp) {
    const std::size_t dim = static_cast<std::size_t>(mlp->input_dim());
    const std::size_t curated_len = CuratedFeatures::names().size();
    if (dim <= curated_len) {
      rec.warnings.push_back("mood model input dimension too small");
      mlp = nullptr;
    } else {
      mood_keep = dim - curated_len;
    }
  }

  stage("environment");
  try {
    const LldMatrix env_lld = extract_lld(chain.suppressed, cfg.features);
    const auto env_features = make_environment_features(chain.csne, env_lld);
    if (tree) {
      auto [label, conf] = classify_environment(*tree, env_features);
      rec.has_environment = true;
      rec.environment = label;
      rec.environment_confidence = conf;
    } else {
      rec.warnings.push_back("environment model unavailable");
    }
  } catch (const std::exception& e) {
    rec.warnings.push_back(std::string("environment stage: ") + e.what());
  }

  stage("diarize");
  DiarizationResult diar;
  bool have_segments = false;
  try {
    const FrameSeries enhanced_frames = frame_signal(chain.enhanced, Window::Rect);
    const VadDecision enhanced_vad = detect_speech(enhanced_frames, cfg.vad);
    DiarizeConfig dcfg = cfg.diarize;
    dcfg.seed = cfg.seed;
    diar = diarize(chain.enhanced, enhanced_vad, dcfg);
    if (diar.single_speaker_fallback)
      rec.warnings.push_back("single speaker (degenerate clusters)");
    have_segments = true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TooLittleSpeech) {
      // Treat the whole clip as one segment from a single speaker.
      const std::size_t n_frames = frame_count(chain.enhanced.samples.size());
      diar.segments = {{0, n_frames, 0}};
      have_segments = true;
      rec.warnings.push_back("too little speech to diarize; single segment assumed");
    } else {
      rec.warnings.push_back(std::string("diarize stage: ") + e.what());
    }
  }

  stage("features");
  try {
    rec.clip_curated = compute_curated(chain.enhanced, cfg.features);
    rec.has_clip_features = true;
    for (const std::string& w : rec.clip_curated.warnings) rec.warnings.push_back(w);
  } catch (const std::exception& e) {
    rec.warnings.push_back(std::string("clip features: ") + e.what());
  }

  stage("mood");
  std::vector<int> mood_votes;
  for (const SpeakerSegment& seg : (have_segments ? diar.segments : std::vector<SpeakerSegment>{})) {
    SegmentRecord sr;
    sr.segment = seg;
    const std::size_t start = seg.start_frame * kHop;
    const std::size_t stop =
        std::min(chain.enhanced.samples.size(), (seg.end_frame - 1) * kHop + kFrameLen);
    AudioClip sub;
    sub.sample_rate_hz = chain.enhanced.sample_rate_hz;
    sub.source_id = rec.source_id + "#seg";
    sub.samples.assign(chain.enhanced.samples.begin() + start,
                       chain.enhanced.samples.begin() + stop);
    AudioClip sub_orig;
    sub_orig.sample_rate_hz = chain.suppressed.sample_rate_hz;
    sub_orig.samples.assign(chain.suppressed.samples.begin() + start,
                            chain.suppressed.samples.begin() + stop);
    try {
      sr.csne_db = csne_db(sub_orig, sub, cfg.denoise.csne_cap_db);
      sr.curated = compute_curated(sub, cfg.features);
      if (mlp) {
        const LldMatrix lld = extract_lld(sub, cfg.features);
        const auto fv = assemble_feature_vector(sr.curated, lld, mood_keep);
        auto [label, probs] = classify_mood(*mlp, fv);
        sr.has_mood = true;
        sr.mood = label;
        sr.mood_probs = std::move(probs);
        mood_votes.push_back(static_cast<int>(label));
      }
    } catch (const std::exception& e) {
      rec.warnings.push_back(std::string("segment features: ") + e.what());
    }
    rec.segments.push_back(std::move(sr));
  }
  if (!mood_votes.empty()) {
    std::vector<int> counts(mood_label_names().size(), 0);
    for (int v : mood_votes) ++counts[v];
    const int best = static_cast<int>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    rec.has_clip_mood = true;
    rec.clip_mood = static_cast<MoodLabel>(best);
  } else if (mlp == nullptr) {
    rec.warnings.push_back("mood model unavailable");
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Batch helpers

namespace detail {

inline std::vector<std::string> list_wavs(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".wav") paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

// Runs fn(i) over [0, n) on `jobs` threads; exceptions surface in order.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct AnalyzeResult {
  std::vector<AnalysisRecord> records;
  std::string records_path;
  std::string summary_path;
};

// Batch analysis over a directory of WAV files. Records are written as
// NDJSON in input order; per-clip failures become warnings, never aborts.
inline AnalyzeResult run_analyze(const std::string& input_dir, const std::string& models_dir,
                                 const std::string& out_dir, const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const auto paths = detail::list_wavs(input_dir);
  if (paths.empty()) throw Error(ErrorCode::NoInputs, "no WAV files in " + input_dir);

  const std::string tree_path = (fs::path(models_dir) / "tree.json").string();
  const std::string mlp_path = (fs::path(models_dir) / "mlp.json").string();
  if (!fs::exists(tree_path)) throw Error(ErrorCode::ModelMissing, tree_path);
  if (!fs::exists(mlp_path)) throw Error(ErrorCode::ModelMissing, mlp_path);
  const DecisionTree tree = tree_from_json(load_json(tree_path));
  const MlpModel mlp = mlp_from_json(load_json(mlp_path));

  AnalyzeResult result;
  result.records.resize(paths.size());
  detail::parallel_for(paths.size(), cfg.jobs, [&](std::size_t i) {
    result.records[i] = analyze_clip(paths[i], cfg, &tree, &mlp);
  });

  fs::create_directories(out_dir);
  result.records_path = (fs::path(out_dir) / "records.ndjson").string();
  std::ofstream nd(result.records_path);
  if (!nd) throw Error(ErrorCode::IoError, "cannot write " + result.records_path);
  for (const auto& rec : result.records) nd << record_to_json(rec, cfg.debug).dump() << '\n';

  // Corpus summary: label tallies and mean CSNE.
  std::vector<int> env_counts(environment_label_names().size(), 0);
  std::vector<int> mood_counts(mood_label_names().size(), 0);
  double csne_sum = 0.0;
  std::size_t csne_n = 0, analyzed = 0;
  for (const auto& rec : result.records) {
    if (rec.has_csne) {
      csne_sum += rec.csne_db;
      ++csne_n;
      ++analyzed;
    }
    if (rec.has_environment) ++env_counts[static_cast<int>(rec.environment)];
    if (rec.has_clip_mood) ++mood_counts[static_cast<int>(rec.clip_mood)];
  }
  result.summary_path = (fs::path(out_dir) / "summary.csv").string();
  std::ofstream sm(result.summary_path);
  if (!sm) throw Error(ErrorCode::IoError, "cannot write " + result.summary_path);
  sm << "metric,value\n";
  sm << "clips," << paths.size() << '\n';
  sm << "analyzed," << analyzed << '\n';
  sm << "mean_csne_db," << (csne_n > 0 ? csne_sum / static_cast<double>(csne_n) : 0.0) << '\n';
  for (std::size_t i = 0; i < env_counts.size(); ++i)
    sm << "environment_" << environment_label_names()[i] << ',' << env_counts[i] << '\n';
  for (std::size_t i = 0; i < mood_counts.size(); ++i)
    sm << "mood_" << mood_label_names()[i] << ',' << mood_counts[i] << '\n';

  if (analyzed == 0)
    throw Error(ErrorCode::NoInputs, "no clip could be analyzed in " + input_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Manifest-driven training / evaluation

struct ManifestRow {
  std::string path;
  std::string label;
  bool is_test = false;
};

inline std::vector<ManifestRow> load_manifest(const std::string& path,
                                              const std::vector<std::string>& label_set) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ManifestMalformed, "cannot open manifest " + path);
  std::string line;
  if (!std::getline(f, line))
    throw Error(ErrorCode::ManifestMalformed, "empty manifest " + path);
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (strip(line) != "path,label,split")
    throw Error(ErrorCode::ManifestMalformed, "manifest header must be path,label,split");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string p, label, split;
    if (!std::getline(ss, p, ',') || !std::getline(ss, label, ',') ||
        !std::getline(ss, split, ','))
      throw Error(ErrorCode::ManifestMalformed,
                  "line " + std::to_string(line_no) + ": expected path,label,split");
    if (label_index(label_set, label) < 0)
      throw Error(ErrorCode::ManifestMalformed,
                  "line " + std::to_string(line_no) + ": unknown label '" + label + "'");
    if (split != "train" && split != "test")
      throw Error(ErrorCode::ManifestMalformed,
                  "line " + std::to_string(line_no) + ": split must be train or test");
    ManifestRow row;
    std::filesystem::path fp(p);
    row.path = fp.is_absolute() || base.empty() ? p : (base / fp).string();
    row.label = label;
    row.is_test = split == "test";
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::ManifestMalformed, "manifest has no rows");
  return rows;
}

inline nlohmann::ordered_json metrics_to_json(const Metrics& m,
                                              const std::vector<std::string>& labels) {
  nlohmann::ordered_json j;
  j["n"] = m.n;
  j["accuracy"] = m.accuracy;
  j["labels"] = labels;
  j["confusion"] = m.confusion;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  return j;
}

inline std::string metrics_table(const Metrics& m, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "accuracy: " << m.accuracy << " (" << m.n << " rows)\n";
  os << "label          precision  recall\n";
  for (std::size_t c = 0; c < labels.size(); ++c) {
    os << labels[c];
    for (std::size_t pad = labels[c].size(); pad < 15; ++pad) os << ' ';
    os << m.precision[c] << "  " << m.recall[c] << '\n';
  }
  os << "confusion (rows = truth):\n";
  for (const auto& row : m.confusion) {
    for (int v : row) os << v << ' ';
    os << '\n';
  }
  return os.str();
}

enum class TrainMode { Tree, Mlp };

struct TrainResult {
  Metrics metrics;
  std::string model_path;
  std::string metrics_path;
};

// Features come through the same front chain as analysis; the split column
// is honored exactly.
inline TrainResult run_train(TrainMode mode, const std::string& manifest_path,
                             const std::string& out_dir, const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const auto& label_set = mode == TrainMode::Tree ? environment_label_names()
                                                  : mood_label_names();
  const auto rows = load_manifest(manifest_path, label_set);

  std::vector<ClipFeatures> feats(rows.size());
  detail::parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    feats[i] = extract_clip_features(rows[i].path, cfg);
  });
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (!feats[i].ok)
      throw Error(ErrorCode::IoError, rows[i].path + ": " + feats[i].error);

  std::vector<std::vector<double>> train_x, test_x;
  std::vector<int> train_y, test_y;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int label = label_index(label_set, rows[i].label);
    const auto& fv = mode == TrainMode::Tree ? feats[i].environment_features
                                             : feats[i].mood_features;
    if (rows[i].is_test) {
      test_x.push_back(fv);
      test_y.push_back(label);
    } else {
      train_x.push_back(fv);
      train_y.push_back(label);
    }
  }
  if (train_x.empty()) throw Error(ErrorCode::ManifestMalformed, "no training rows");

  fs::create_directories(out_dir);
  TrainResult result;
  if (mode == TrainMode::Tree) {
    const DecisionTree tree =
        train_tree(train_x, train_y, static_cast<int>(label_set.size()), cfg.tree);
    result.model_path = (fs::path(out_dir) / "tree.json").string();
    save_json(result.model_path, tree_to_json(tree));
    result.metrics = test_x.empty() ? evaluate_tree(tree, train_x, train_y)
                                    : evaluate_tree(tree, test_x, test_y);
  } else {
    MlpConfig mcfg = cfg.mlp;
    mcfg.seed = cfg.seed;
    const MlpModel model =
        train_mlp(train_x, train_y, static_cast<int>(label_set.size()), mcfg);
    result.model_path = (fs::path(out_dir) / "mlp.json").string();
    save_json(result.model_path, mlp_to_json(model));
    result.metrics = test_x.empty() ? evaluate_mlp(model, train_x, train_y)
                                    : evaluate_mlp(model, test_x, test_y);
  }
  result.metrics_path =
      (fs::path(out_dir) / (mode == TrainMode::Tree ? "metrics_tree.json" : "metrics_mlp.json"))
          .string();
  save_json(result.metrics_path, metrics_to_json(result.metrics, label_set));
  return result;
}

// Evaluates a stored model against the manifest's test rows.
inline Metrics run_evaluate(TrainMode mode, const std::string& manifest_path,
                            const std::string& models_dir, const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const auto& label_set = mode == TrainMode::Tree ? environment_label_names()
                                                  : mood_label_names();
  const auto rows = load_manifest(manifest_path, label_set);
  std::vector<ManifestRow> test_rows;
  for (const auto& r : rows)
    if (r.is_test) test_rows.push_back(r);
  if (test_rows.empty()) throw Error(ErrorCode::EmptyTestSet, "manifest has no test rows");

  const std::string model_path =
      (fs::path(models_dir) / (mode == TrainMode::Tree ? "tree.json" : "mlp.json")).string();
  if (!fs::exists(model_path)) throw Error(ErrorCode::ModelMissing, model_path);

  std::size_t keep_override = 0;
  DecisionTree tree;
  MlpModel mlp;
  if (mode == TrainMode::Tree) {
    tree = tree_from_json(load_json(model_path));
  } else {
    mlp = mlp_from_json(load_json(model_path));
    keep_override = static_cast<std::size_t>(mlp.input_dim()) - CuratedFeatures::names().size();
  }

  std::vector<ClipFeatures> feats(test_rows.size());
  detail::parallel_for(test_rows.size(), cfg.jobs, [&](std::size_t i) {
    feats[i] = extract_clip_features(test_rows[i].path, cfg, keep_override);
  });
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    if (!feats[i].ok)
      throw Error(ErrorCode::IoError, test_rows[i].path + ": " + feats[i].error);
    x.push_back(mode == TrainMode::Tree ? feats[i].environment_features
                                        : feats[i].mood_features);
    y.push_back(label_index(label_set, test_rows[i].label));
  }
  return mode == TrainMode::Tree ? evaluate_tree(tree, x, y) : evaluate_mlp(mlp, x, y);
}

// Dumps per-clip and per-segment feature rows as CSV and NDJSON.
struct FeatureDumpResult {
  std::string csv_path;
  std::string ndjson_path;
  std::size_t rows = 0;
};

inline FeatureDumpResult run_features(const std::string& input_dir, const std::string& out_dir,
                                      const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const auto paths = detail::list_wavs(input_dir);
  if (paths.empty()) throw Error(ErrorCode::NoInputs, "no WAV files in " + input_dir);

  std::vector<AnalysisRecord> records(paths.size());
  detail::parallel_for(paths.size(), cfg.jobs, [&](std::size_t i) {
    records[i] = analyze_clip(paths[i], cfg, nullptr, nullptr);
  });

  fs::create_directories(out_dir);
  FeatureDumpResult result;
  result.csv_path = (fs::path(out_dir) / "features.csv").string();
  result.ndjson_path = (fs::path(out_dir) / "features.ndjson").string();
  std::ofstream csv(result.csv_path);
  std::ofstream nd(result.ndjson_path);
  if (!csv || !nd) throw Error(ErrorCode::IoError, "cannot write feature dumps");

  csv << "source_id,scope,start_s,end_s";
  for (const auto& n : CuratedFeatures::names()) csv << ',' << n;
  csv << '\n';
  auto emit = [&](const std::string& src, const std::string& scope, double a, double b,
                  const CuratedFeatures& c) {
    csv << src << ',' << scope << ',' << a << ',' << b;
    for (double v : c.to_vector()) csv << ',' << v;
    csv << '\n';
    nlohmann::ordered_json j;
    j["source_id"] = src;
    j["scope"] = scope;
    j["start_s"] = a;
    j["end_s"] = b;
    j["curated"] = detail::curated_to_json(c);
    nd << j.dump() << '\n';
    ++result.rows;
  };
  for (const auto& rec : records) {
    if (rec.has_clip_features)
      emit(rec.source_id, "clip", 0.0, rec.duration_s, rec.clip_curated);
    for (const auto& seg : rec.segments) {
      const double a = static_cast<double>(seg.segment.start_frame) * kHop / kSampleRateHz;
      const double b =
          (static_cast<double>(seg.segment.end_frame - 1) * kHop + kFrameLen) / kSampleRateHz;
      emit(rec.source_id, "segment", a, b, seg.curated);
    }
  }
  return result;
}

}  // namespace papc
