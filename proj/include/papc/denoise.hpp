#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "papc/audio_io.hpp"
#include "papc/common.hpp"
#include "papc/dsp_core.hpp"

namespace papc {

struct DenoiseConfig {
  double alpha_noise = 0.95;         // recursive noise averaging
  double alpha_dd = 0.92;            // decision-directed a-priori SNR weight
  double power_smooth_alpha = 0.8;   // smoothing before minima tracking
  double presence_smooth_alpha = 0.2;
  double presence_ratio_delta = 5.0; // smoothed power / minimum => speech
  int minima_window_frames = 150;
  double gain_floor_db = -25.0;
  double xi_min_db = -15.0;
  double csne_cap_db = 100.0;
  std::string gain_dump_path;        // per-frame gain CSV when non-empty
};

struct NoiseEstimate {
  std::vector<double> psd;            // per-bin noise power, final frame
  std::vector<double> presence_prob;  // per-bin p, final frame
  int minima_window = 0;
};

namespace detail {

// Exponential integral E1 for x > 0: series below 1, continued fraction above.
inline double expint_e1(double x) {
  constexpr double kEulerGamma = 0.5772156649015329;
  if (x <= 0.0) return 708.0;  // treated as the x->0+ limit, caller clamps
  if (x > 700.0) return 0.0;
  if (x <= 1.0) {
    double sum = -kEulerGamma - std::log(x);
    double term = 1.0;
    for (int k = 1; k <= 40; ++k) {
      term *= -x / k;
      const double add = -term / k;
      sum += add;
      if (std::abs(add) < 1e-16 * std::abs(sum)) break;
    }
    return sum;
  }
  // Lentz continued fraction for x > 1
  double b = x + 1.0, c = 1e308, d = 1.0 / b, h = d;
  for (int i = 1; i <= 100; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return h * std::exp(-x);
}

}  // namespace detail

// Change in signal-to-noise energy, Eq-style energy ratio in dB, clamped
// to +/- cap_db (identical clips hit the positive cap).
inline double csne_db(const AudioClip& original, const AudioClip& enhanced,
                      double cap_db = 100.0) {
  if (original.samples.size() != enhanced.samples.size())
    throw Error(ErrorCode::LengthMismatch, "csne_db requires equal lengths");
  if (original.samples.empty())
    throw Error(ErrorCode::EmptyClip, "csne_db of empty clips");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < enhanced.samples.size(); ++i) {
    const double sp = enhanced.samples[i];
    const double diff = sp - original.samples[i];
    num += sp * sp;
    den += diff * diff;
  }
  if (den <= 0.0) return cap_db;
  if (num <= 0.0) return -cap_db;
  return std::clamp(10.0 * std::log10(num / den), -cap_db, cap_db);
}

// STFT-domain suppression: minima-controlled recursive noise averaging,
// decision-directed a-priori SNR, LSA gain blended by speech presence,
// hann overlap-add resynthesis. Output length equals input length.
inline AudioClip denoise_clip(const AudioClip& clip, const DenoiseConfig& cfg = {},
                              NoiseEstimate* noise_out = nullptr) {
  if (clip.samples.empty()) throw Error(ErrorCode::EmptyClip, "empty clip " + clip.source_id);

  // Pad so every real sample sits under full window overlap; trimmed at the end.
  const std::size_t pad = kFrameLen;
  AudioClip padded;
  padded.sample_rate_hz = clip.sample_rate_hz;
  padded.samples.assign(clip.samples.size() + 2 * pad, 0.0);
  std::copy(clip.samples.begin(), clip.samples.end(), padded.samples.begin() + pad);

  const FrameSeries frames = frame_signal(padded, Window::Hann);
  const std::vector<double> win = hann_window(kFrameLen);
  const int n_bins = kNumBins;
  const double g_min = std::pow(10.0, cfg.gain_floor_db / 20.0);
  const double xi_min = std::pow(10.0, cfg.xi_min_db / 10.0);
  constexpr double kTiny = 1e-20;

  std::vector<double> smoothed(n_bins, 0.0), noise_psd(n_bins, 0.0), presence(n_bins, 0.0);
  std::vector<double> prev_gain(n_bins, 1.0), prev_gamma(n_bins, 1.0);
  const int w = std::max(1, cfg.minima_window_frames);
  std::vector<double> min_ring(static_cast<std::size_t>(w) * n_bins, 0.0);
  constexpr std::size_t kNoiseInitFrames = 10;
  std::size_t content_frames = 0;  // exactly-zero frames bypass the tracker

  std::ofstream gain_dump;
  if (!cfg.gain_dump_path.empty()) {
    gain_dump.open(cfg.gain_dump_path);
    if (!gain_dump) throw Error(ErrorCode::IoError, "cannot write " + cfg.gain_dump_path);
    gain_dump.precision(12);
  }

  std::vector<double> acc(padded.samples.size(), 0.0), wsum(padded.samples.size(), 0.0);
  std::vector<std::complex<double>> full(kFftSize);

  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    auto bins = stft_frame(frames.frame(t), kFftSize);
    double frame_power = 0.0;
    for (int k = 0; k < n_bins; ++k) frame_power += std::norm(bins[k]);
    if (frame_power > 0.0) {
      ++content_frames;
      const bool init_phase = content_frames <= kNoiseInitFrames;
      const std::size_t ring_slot = ((content_frames - 1) % w) * n_bins;
      const std::size_t filled = std::min<std::size_t>(content_frames, w);
      for (int k = 0; k < n_bins; ++k) {
        const double power = std::norm(bins[k]);
        if (content_frames == 1)
          smoothed[k] = power;
        else
          smoothed[k] = cfg.power_smooth_alpha * smoothed[k] +
                        (1.0 - cfg.power_smooth_alpha) * power;
        min_ring[ring_slot + k] = smoothed[k];
        double pmin = min_ring[k];
        for (std::size_t r = 1; r < filled; ++r)
          pmin = std::min(pmin, min_ring[r * n_bins + k]);

        if (init_phase) {
          // running mean of the first content frames seeds the tracker
          noise_psd[k] += (power - noise_psd[k]) / static_cast<double>(content_frames);
          presence[k] = 0.0;
        } else {
          const bool indicator =
              smoothed[k] > cfg.presence_ratio_delta * std::max(pmin, kTiny);
          presence[k] = cfg.presence_smooth_alpha * presence[k] +
                        (1.0 - cfg.presence_smooth_alpha) * (indicator ? 1.0 : 0.0);
          const double alpha_d = cfg.alpha_noise + (1.0 - cfg.alpha_noise) * presence[k];
          noise_psd[k] = alpha_d * noise_psd[k] + (1.0 - alpha_d) * power;
        }

        const double gamma = power / std::max(noise_psd[k], kTiny);
        double xi = cfg.alpha_dd * prev_gain[k] * prev_gain[k] * prev_gamma[k] +
                    (1.0 - cfg.alpha_dd) * std::max(gamma - 1.0, 0.0);
        xi = std::max(xi, xi_min);
        const double v = std::clamp(xi * gamma / (1.0 + xi), 1e-10, 700.0);
        const double g_lsa =
            std::min(1.0, xi / (1.0 + xi) * std::exp(0.5 * detail::expint_e1(v)));
        const double gain =
            std::max(std::pow(g_lsa, presence[k]) * std::pow(g_min, 1.0 - presence[k]), g_min);

        bins[k] *= gain;
        prev_gain[k] = gain;
        prev_gamma[k] = gamma;
        if (gain_dump.is_open()) {
          gain_dump << gain;
          gain_dump << (k + 1 == n_bins ? '\n' : ',');
        }
      }
    }

    // Hermitian completion, inverse FFT, overlap-add.
    for (int k = 0; k < n_bins; ++k) full[k] = bins[k];
    for (int k = n_bins; k < kFftSize; ++k) full[k] = std::conj(bins[kFftSize - k]);
    fft_radix2(full, true);
    const std::size_t start = t * kHop;
    for (int i = 0; i < kFrameLen; ++i) {
      acc[start + i] += full[i].real();
      wsum[start + i] += win[i];
    }
  }

  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.source_id = clip.source_id;
  out.samples.resize(clip.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double denom = wsum[pad + i];
    out.samples[i] = denom > 1e-12 ? acc[pad + i] / denom : 0.0;
  }

  if (noise_out) {
    noise_out->psd = noise_psd;
    noise_out->presence_prob = presence;
    noise_out->minima_window = w;
  }
  return out;
}

}  // namespace papc
