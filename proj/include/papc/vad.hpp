#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <vector>

#include "papc/audio_io.hpp"
#include "papc/common.hpp"
#include "papc/dsp_core.hpp"

namespace papc {

struct VadConfig {
  int noise_window_frames = 100;   // ~1 s sliding minimum
  double threshold_db = 6.0;
  int hangover_frames = 8;
  double energy_smooth_alpha = 0.9;
  double epsilon = 1e-10;
};

struct VadDecision {
  std::vector<bool> speech_flags;
  std::vector<double> posterior_snr_db;
  std::vector<double> noise_floor;
  int frame_len = kFrameLen;
  int hop = kHop;

  std::size_t speech_frame_count() const {
    return static_cast<std::size_t>(std::count(speech_flags.begin(), speech_flags.end(), true));
  }
};

// Frame relevance by posterior SNR against a minimum-statistics noise floor:
// smoothed energy, sliding-window minimum, threshold, then hangover.
inline VadDecision detect_speech(const FrameSeries& frames, const VadConfig& cfg = {}) {
  if (frames.n_frames == 0) throw Error(ErrorCode::EmptyClip, "no frames to classify");
  const std::size_t n = frames.n_frames;
  VadDecision d;
  d.frame_len = frames.frame_len;
  d.hop = frames.hop;
  d.speech_flags.assign(n, false);
  d.posterior_snr_db.resize(n);
  d.noise_floor.resize(n);

  std::vector<double> energy(n), smoothed(n);
  for (std::size_t t = 0; t < n; ++t) {
    double e = 0.0;
    for (double x : frames.frame(t)) e += x * x;
    energy[t] = e;
    smoothed[t] = t == 0 ? e
                         : cfg.energy_smooth_alpha * smoothed[t - 1] +
                               (1.0 - cfg.energy_smooth_alpha) * e;
  }

  // Sliding minimum over the trailing window, monotonic-deque kept O(n).
  std::deque<std::size_t> q;
  for (std::size_t t = 0; t < n; ++t) {
    while (!q.empty() && smoothed[q.back()] >= smoothed[t]) q.pop_back();
    q.push_back(t);
    if (q.front() + cfg.noise_window_frames <= t) q.pop_front();
    d.noise_floor[t] = smoothed[q.front()];
    d.posterior_snr_db[t] =
        10.0 * std::log10((energy[t] + cfg.epsilon) / (d.noise_floor[t] + cfg.epsilon));
  }

  int hang = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (d.posterior_snr_db[t] > cfg.threshold_db) {
      d.speech_flags[t] = true;
      hang = cfg.hangover_frames;
    } else if (hang > 0) {
      d.speech_flags[t] = true;
      --hang;
    }
  }
  return d;
}

// Keeps hop-sized slices of speech-flagged frames; the final frame, when
// flagged, contributes its full length.
inline AudioClip suppress_silence(const AudioClip& clip, const VadDecision& decision) {
  if (clip.samples.empty()) throw Error(ErrorCode::EmptyClip, "empty clip");
  const std::size_t n_frames = decision.speech_flags.size();
  if (n_frames != frame_count(clip.samples.size(), decision.frame_len, decision.hop))
    throw Error(ErrorCode::LengthMismatch, "decision does not match clip framing");
  if (decision.speech_frame_count() == 0)
    throw Error(ErrorCode::NoSpeechDetected, "no speech frames in " + clip.source_id);

  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.source_id = clip.source_id;
  out.samples.reserve(clip.samples.size());
  const std::size_t n = clip.samples.size();
  for (std::size_t t = 0; t < n_frames; ++t) {
    if (!decision.speech_flags[t]) continue;
    const std::size_t start = t * decision.hop;
    const std::size_t want = (t + 1 == n_frames) ? decision.frame_len : decision.hop;
    const std::size_t stop = std::min(n, start + want);
    for (std::size_t i = start; i < stop; ++i) out.samples.push_back(clip.samples[i]);
  }
  return out;
}

}  // namespace papc
