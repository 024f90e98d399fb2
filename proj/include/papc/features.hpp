#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "papc/audio_io.hpp"
#include "papc/common.hpp"
#include "papc/dsp_core.hpp"
#include "papc/vad.hpp"

namespace papc {

enum class JitterDivisor { M, MMinus1 };

struct PitchConfig {
  double f0_min_hz = 50.0;
  double f0_max_hz = 500.0;
  double voicing_threshold = 0.45;  // autocorrelation peak needed for voicing
  VadConfig vad;                    // supplies the noise floor for the energy gate
};

struct FeaturesConfig {
  std::size_t keep = 3000;  // DCT truncation, clamped to the functional length
  JitterDivisor jitter_divisor = JitterDivisor::M;
  PitchConfig pitch;
};

struct PitchTrack {
  std::vector<double> f0_hz;      // 0 where unvoiced
  std::vector<double> period_s;   // 1/f0 where voiced, else 0
  std::vector<bool> voiced;
  std::vector<double> voicing_strength;  // peak autocorrelation, [0, 1]

  std::size_t voiced_count() const {
    return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
  }
  std::vector<double> voiced_f0() const {
    std::vector<double> v;
    for (std::size_t t = 0; t < voiced.size(); ++t)
      if (voiced[t]) v.push_back(f0_hz[t]);
    return v;
  }
  std::vector<double> voiced_periods() const {
    std::vector<double> v;
    for (std::size_t t = 0; t < voiced.size(); ++t)
      if (voiced[t]) v.push_back(period_s[t]);
    return v;
  }
};

namespace detail {

// 16-tap hann-windowed sinc interpolation at fractional position t.
// Caller guarantees t is at least 8 samples from either end.
inline double sinc_interp(std::span<const double> x, double t) {
  const long i0 = static_cast<long>(std::floor(t));
  const double frac = t - static_cast<double>(i0);
  if (frac < 1e-12) return x[i0];
  double acc = 0.0;
  for (int j = -7; j <= 8; ++j) {
    const double d = static_cast<double>(j) - frac;
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * d / 8.0));
    acc += x[i0 + j] * sinc(d) * w;
  }
  return acc;
}

// Normalized cross-correlation of a frame against itself shifted by a
// fractional lag. Approaches 1 for periodic content; drives Eq-7 HNR.
inline double fractional_lag_ncc(std::span<const double> frame, double lag) {
  const int n = static_cast<int>(frame.size());
  const int margin = 9;
  const int window = n - static_cast<int>(std::ceil(lag)) - margin;
  if (window < 16) return 0.0;
  double mean = 0.0;
  for (double v : frame) mean += v;
  mean /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int i = 0; i < window; ++i) {
    const double a = frame[i] - mean;
    const double b = sinc_interp(frame, static_cast<double>(i) + lag) - mean;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
  }
  const double denom = std::sqrt(saa * sbb);
  return denom > 0.0 ? sab / denom : 0.0;
}

inline double parabolic_offset(double ym1, double y0, double yp1) {
  const double denom = ym1 - 2.0 * y0 + yp1;
  if (std::abs(denom) < 1e-18) return 0.0;
  return std::clamp(0.5 * (ym1 - yp1) / denom, -0.5, 0.5);
}

// Lag refinement on the symmetric NCC, which is free of the biased
// estimator's taper; the taper otherwise drags the vertex toward 0.
inline double refine_lag_by_ncc(std::span<const double> frame, int lag) {
  const double ym1 = fractional_lag_ncc(frame, lag - 1.0);
  const double y0 = fractional_lag_ncc(frame, static_cast<double>(lag));
  const double yp1 = fractional_lag_ncc(frame, lag + 1.0);
  return static_cast<double>(lag) + parabolic_offset(ym1, y0, yp1);
}

}  // namespace detail

// Autocorrelation pitch per 40 ms frame. A frame is voiced when the peak
// within the 50-500 Hz lag range is strong and its energy clears the VAD
// noise floor.
inline PitchTrack track_pitch(const AudioClip& clip, const PitchConfig& cfg = {}) {
  const FrameSeries frames = frame_signal(clip, Window::Rect);
  const VadDecision vad = detect_speech(frames, cfg.vad);
  const int lag_min = static_cast<int>(std::ceil(kSampleRateHz / cfg.f0_max_hz));
  const int lag_max = static_cast<int>(std::floor(kSampleRateHz / cfg.f0_min_hz));

  PitchTrack track;
  track.f0_hz.assign(frames.n_frames, 0.0);
  track.period_s.assign(frames.n_frames, 0.0);
  track.voiced.assign(frames.n_frames, false);
  track.voicing_strength.assign(frames.n_frames, 0.0);

  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    auto frame = frames.frame(t);
    std::vector<double> r;
    try {
      r = autocorrelation(frame, lag_max);
    } catch (const Error&) {
      continue;  // silent frame stays unvoiced
    }
    int best = lag_min;
    for (int l = lag_min; l <= lag_max; ++l)
      if (r[l] > r[best]) best = l;
    track.voicing_strength[t] = std::clamp(r[best], 0.0, 1.0);
    double energy = 0.0;
    for (double x : frame) energy += x * x;
    const bool energetic = energy > vad.noise_floor[t];
    if (r[best] < cfg.voicing_threshold || !energetic) continue;

    double lag = static_cast<double>(best);
    if (best > lag_min && best < lag_max) lag = detail::refine_lag_by_ncc(frame, best);
    double f0 = std::clamp(kSampleRateHz / lag, cfg.f0_min_hz, cfg.f0_max_hz);
    track.voiced[t] = true;
    track.f0_hz[t] = f0;
    track.period_s[t] = 1.0 / f0;
  }
  return track;
}

// Average absolute difference between consecutive vocal periods, in
// seconds. The divisor is M as printed (configurable to M-1).
inline double jitter_abs_s(const PitchTrack& track,
                           JitterDivisor divisor = JitterDivisor::M,
                           bool* insufficient = nullptr) {
  const auto periods = track.voiced_periods();
  const std::size_t m = periods.size();
  if (insufficient) *insufficient = m < 2;
  if (m < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < m; ++j) sum += std::abs(periods[j] - periods[j + 1]);
  return sum / static_cast<double>(divisor == JitterDivisor::M ? m : m - 1);
}

// Relative jitter in percent: the two 1/M-weighted sums cancel, leaving
// 100 * sum|dF| / sum of the first M-1 periods.
inline double jitter_rel_pct(const PitchTrack& track, bool* insufficient = nullptr) {
  const auto periods = track.voiced_periods();
  const std::size_t m = periods.size();
  if (insufficient) *insufficient = m < 2;
  if (m < 2) return 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    num += std::abs(periods[j] - periods[j + 1]);
    den += std::abs(periods[j]);
  }
  if (den <= 0.0) return 0.0;
  return 100.0 * num / den;
}

// Cycle-to-cycle intensity variability over voiced frames, in dB.
// A_i is the peak absolute amplitude within the i-th voiced frame.
inline double shimmer_db(const AudioClip& clip, const PitchTrack& track,
                         bool* insufficient = nullptr) {
  const FrameSeries frames = frame_signal(clip, Window::Rect);
  if (frames.n_frames != track.voiced.size())
    throw Error(ErrorCode::LengthMismatch, "track does not match clip framing");
  std::vector<double> amps;
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    if (!track.voiced[t]) continue;
    double a = 0.0;
    for (double x : frames.frame(t)) a = std::max(a, std::abs(x));
    if (a <= 0.0)
      throw Error(ErrorCode::ZeroAmplitudeFrame, "voiced frame with zero amplitude");
    amps.push_back(a);
  }
  const std::size_t m = amps.size();
  if (insufficient) *insufficient = m < 2;
  if (m < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) sum += std::abs(std::log10(amps[i] / amps[i + 1]));
  return 20.0 / static_cast<double>(m) * sum;
}

// Normalized spread of the fundamental: (max-min)/(max+min).
inline double freq_modulation(const PitchTrack& track, bool* insufficient = nullptr) {
  const auto f0 = track.voiced_f0();
  if (insufficient) *insufficient = f0.empty();
  if (f0.empty()) return 0.0;
  const auto [mn, mx] = std::minmax_element(f0.begin(), f0.end());
  const double denom = *mx + *mn;
  return denom > 0.0 ? (*mx - *mn) / denom : 0.0;
}

// Outlier-resistant pitch span: 95th minus 5th percentile of voiced f0.
inline double freq_range_hz(const PitchTrack& track, bool* insufficient = nullptr) {
  const auto f0 = track.voiced_f0();
  if (insufficient) *insufficient = f0.empty();
  if (f0.empty()) return 0.0;
  return percentile(f0, 95.0) - percentile(f0, 5.0);
}

// Harmonics-to-noise ratio from a normalized autocorrelation value.
inline double hnr_db_from_autocorr(double r) {
  r = std::clamp(r, 1e-6, 1.0 - 1e-6);
  return 10.0 * std::log10(r / (1.0 - r));
}

// Mean and population std of per-voiced-frame HNR. Periodicity is measured
// by normalized cross-correlation at the refined pitch lag so that clean
// periodic frames saturate toward the clamp.
inline std::pair<double, double> hnr_segmental(const AudioClip& clip, const PitchTrack& track,
                                               bool* insufficient = nullptr) {
  const FrameSeries frames = frame_signal(clip, Window::Rect);
  if (frames.n_frames != track.voiced.size())
    throw Error(ErrorCode::LengthMismatch, "track does not match clip framing");
  std::vector<double> hnrs;
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    if (!track.voiced[t]) continue;
    const double lag = kSampleRateHz * track.period_s[t];
    const double r = detail::fractional_lag_ncc(frames.frame(t), lag);
    hnrs.push_back(hnr_db_from_autocorr(r));
  }
  if (insufficient) *insufficient = hnrs.empty();
  if (hnrs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double h : hnrs) mean += h;
  mean /= static_cast<double>(hnrs.size());
  double var = 0.0;
  for (double h : hnrs) var += (h - mean) * (h - mean);
  var /= static_cast<double>(hnrs.size());
  return {mean, std::sqrt(var)};
}

// Spectral center of mass in bin index, averaged over non-silent frames.
inline double spectral_centroid(const Spectrogram& spec) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    auto m = spec.mag_frame(t);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) {
      num += static_cast<double>(k) * m[k];
      den += m[k];
    }
    if (den <= 0.0) continue;
    total += num / den;
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::AllFramesSilent, "spectral_centroid");
  return total / static_cast<double>(counted);
}

// Mean L2 distance between L1-normalized power spectra of consecutive frames.
inline double spectral_flux(const Spectrogram& spec) {
  if (spec.n_frames < 2) throw Error(ErrorCode::TooFewFrames, "spectral_flux needs 2 frames");
  std::vector<double> prev(spec.n_bins), cur(spec.n_bins);
  bool have_prev = false;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    auto p = spec.power_frame(t);
    double sum = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) sum += p[k];
    if (sum <= 0.0) {
      have_prev = false;  // silent frame breaks the chain
      continue;
    }
    for (int k = 0; k < spec.n_bins; ++k) cur[k] = p[k] / sum;
    if (have_prev) {
      double d2 = 0.0;
      for (int k = 0; k < spec.n_bins; ++k) {
        const double d = cur[k] - prev[k];
        d2 += d * d;
      }
      total += std::sqrt(d2);
      ++pairs;
    }
    std::swap(prev, cur);
    have_prev = true;
  }
  return pairs > 0 ? total / static_cast<double>(pairs) : 0.0;
}

// Normalized Shannon entropy of the power spectrum, in [0, 1].
inline double spectral_entropy(const Spectrogram& spec) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    auto p = spec.power_frame(t);
    double sum = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) sum += p[k];
    if (sum <= 0.0) continue;
    double h = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) {
      const double pj = p[k] / sum;
      if (pj > 0.0) h -= pj * std::log(pj);
    }
    total += h / std::log(static_cast<double>(spec.n_bins));
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::AllFramesSilent, "spectral_entropy");
  return total / static_cast<double>(counted);
}

// Geometric over arithmetic mean of the power spectrum, in [0, 1].
inline double spectral_flatness(const Spectrogram& spec) {
  constexpr double kFloor = 1e-12;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    auto p = spec.power_frame(t);
    double sum = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) sum += p[k];
    if (sum <= 0.0) continue;
    double log_gm = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) log_gm += std::log(std::max(p[k], kFloor));
    log_gm /= static_cast<double>(spec.n_bins);
    const double am = sum / static_cast<double>(spec.n_bins);
    total += std::clamp(std::exp(log_gm) / am, 0.0, 1.0);
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::AllFramesSilent, "spectral_flatness");
  return total / static_cast<double>(counted);
}

inline constexpr int kBarkBands = 24;

// Critical band rate for frequency f in Hz.
inline double bark_z(double f_hz) {
  return 13.0 * std::atan(0.00076 * f_hz) + 3.5 * std::atan((f_hz / 7500.0) * (f_hz / 7500.0));
}

// Sharpness weighting: unity through 15.8 Bark, rising exponentially above.
inline double sharpness_weight(double z) {
  if (z <= 15.8) return 1.0;
  return 0.15 * std::exp(0.42 * (z - 15.8)) + 0.85;
}

// Weighted average of specific loudness over the 24 critical bands, where
// band b contributes at rate z = b. Point mass in band 10 gives 1.1 acum.
inline double sharpness_from_band_loudness(std::span<const double> loudness) {
  if (loudness.size() != kBarkBands)
    throw Error(ErrorCode::InvalidArgument, "expected 24 band loudness values");
  double num = 0.0, den = 0.0;
  for (int b = 0; b < kBarkBands; ++b) {
    const double z = static_cast<double>(b);
    num += loudness[b] * sharpness_weight(z) * z;
    den += loudness[b];
  }
  if (den <= 0.0) throw Error(ErrorCode::AllFramesSilent, "no band loudness");
  return 0.11 * num / den;
}

// Psychoacoustic sharpness in acum, averaged over non-silent frames.
// Specific loudness per band is (band power)^0.23.
inline double sharpness_acum(const Spectrogram& spec) {
  std::vector<int> bin_band(spec.n_bins);
  for (int k = 0; k < spec.n_bins; ++k) {
    const int band = static_cast<int>(std::floor(bark_z(k * spec.bin_hz)));
    bin_band[k] = std::clamp(band, 0, kBarkBands - 1);
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> band_power(kBarkBands);
  std::vector<double> loudness(kBarkBands);
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    auto p = spec.power_frame(t);
    std::fill(band_power.begin(), band_power.end(), 0.0);
    double sum = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) {
      band_power[bin_band[k]] += p[k];
      sum += p[k];
    }
    if (sum <= 0.0) continue;
    for (int b = 0; b < kBarkBands; ++b)
      loudness[b] = band_power[b] > 0.0 ? std::pow(band_power[b], 0.23) : 0.0;
    total += sharpness_from_band_loudness(loudness);
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::AllFramesSilent, "sharpness_acum");
  return total / static_cast<double>(counted);
}

// The curated per-segment scalar set. HNR contributes mean and std, so the
// enumerated list yields 12 values.
struct CuratedFeatures {
  double jitter_abs_s = 0.0;
  double jitter_rel_pct = 0.0;
  double shimmer_db = 0.0;
  double freq_modulation = 0.0;
  double freq_range_hz = 0.0;
  double hnr_mean_db = 0.0;
  double hnr_std_db = 0.0;
  double spectral_centroid = 0.0;
  double spectral_flux = 0.0;
  double spectral_entropy = 0.0;
  double spectral_flatness = 0.0;
  double sharpness_acum = 0.0;
  std::vector<std::string> warnings;

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> n = {
        "jitter_abs_s",   "jitter_rel_pct",   "shimmer_db",       "freq_modulation",
        "freq_range_hz",  "hnr_mean_db",      "hnr_std_db",       "spectral_centroid",
        "spectral_flux",  "spectral_entropy", "spectral_flatness", "sharpness_acum"};
    return n;
  }

  std::vector<double> to_vector() const {
    return {jitter_abs_s,   jitter_rel_pct, shimmer_db,       freq_modulation,
            freq_range_hz,  hnr_mean_db,    hnr_std_db,       spectral_centroid,
            spectral_flux,  spectral_entropy, spectral_flatness, sharpness_acum};
  }
};

inline CuratedFeatures compute_curated(const AudioClip& clip, const FeaturesConfig& cfg = {}) {
  CuratedFeatures out;
  const PitchTrack track = track_pitch(clip, cfg.pitch);
  bool flag = false;
  out.jitter_abs_s = jitter_abs_s(track, cfg.jitter_divisor, &flag);
  if (flag) out.warnings.push_back("insufficient voicing for jitter");
  out.jitter_rel_pct = jitter_rel_pct(track);
  try {
    out.shimmer_db = shimmer_db(clip, track, &flag);
    if (flag) out.warnings.push_back("insufficient voicing for shimmer");
  } catch (const Error& e) {
    out.warnings.push_back(e.what());
  }
  out.freq_modulation = freq_modulation(track, &flag);
  if (flag) out.warnings.push_back("insufficient voicing for pitch statistics");
  out.freq_range_hz = freq_range_hz(track);
  auto [hm, hs] = hnr_segmental(clip, track);
  out.hnr_mean_db = hm;
  out.hnr_std_db = hs;
  const Spectrogram spec = stft(frame_signal(clip, Window::Hann));
  try {
    out.spectral_centroid = spectral_centroid(spec);
    out.spectral_flux = spec.n_frames >= 2 ? spectral_flux(spec) : 0.0;
    out.spectral_entropy = spectral_entropy(spec);
    out.spectral_flatness = spectral_flatness(spec);
    out.sharpness_acum = sharpness_acum(spec);
  } catch (const Error& e) {
    out.warnings.push_back(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame-level low-level descriptors standing in for an external extractor.

inline constexpr int kNumMfcc = 13;
inline constexpr int kNumMelFilters = 26;

inline double mel_from_hz(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double hz_from_mel(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular mel filterbank over one-sided power bins, rows sum per filter.
inline std::vector<std::vector<double>> mel_filterbank(int n_filters, int n_bins,
                                                       double bin_hz, double f_lo,
                                                       double f_hi) {
  const double m_lo = mel_from_hz(f_lo), m_hi = mel_from_hz(f_hi);
  std::vector<double> centers(n_filters + 2);
  for (int i = 0; i < n_filters + 2; ++i)
    centers[i] = hz_from_mel(m_lo + (m_hi - m_lo) * i / (n_filters + 1));
  std::vector<std::vector<double>> bank(n_filters, std::vector<double>(n_bins, 0.0));
  for (int f = 0; f < n_filters; ++f) {
    const double left = centers[f], mid = centers[f + 1], right = centers[f + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double freq = k * bin_hz;
      if (freq <= left || freq >= right) continue;
      bank[f][k] = freq <= mid ? (freq - left) / (mid - left) : (right - freq) / (right - mid);
    }
  }
  return bank;
}

inline std::vector<double> mfcc_from_power(std::span<const double> power,
                                           const std::vector<std::vector<double>>& bank,
                                           int n_coeffs = kNumMfcc) {
  constexpr double kLogFloor = 1e-10;
  std::vector<double> log_energies(bank.size());
  for (std::size_t f = 0; f < bank.size(); ++f) {
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) e += bank[f][k] * power[k];
    log_energies[f] = std::log(std::max(e, kLogFloor));
  }
  return dct_2(log_energies, n_coeffs);
}

// Per-frame LLD rows plus the flattened mean/std/min/max/range functionals.
struct LldMatrix {
  std::vector<std::string> column_names;
  std::vector<double> values;  // n_frames x n_cols, row-major
  std::size_t n_frames = 0;
  std::size_t n_cols = 0;

  double at(std::size_t t, std::size_t c) const { return values[t * n_cols + c]; }

  std::vector<std::string> functional_names;
  std::vector<double> functionals;  // 5 per column: mean, std, min, max, range
};

inline LldMatrix extract_lld(const AudioClip& clip, const FeaturesConfig& cfg = {}) {
  if (clip.samples.empty()) throw Error(ErrorCode::EmptyClip, "empty clip " + clip.source_id);
  const FrameSeries rect = frame_signal(clip, Window::Rect);
  const Spectrogram spec = stft(frame_signal(clip, Window::Hann));
  const PitchTrack track = track_pitch(clip, cfg.pitch);
  const auto bank = mel_filterbank(kNumMelFilters, spec.n_bins, spec.bin_hz, 50.0,
                                   kSampleRateHz / 2.0);

  LldMatrix lld;
  lld.column_names = {"energy", "zcr"};
  for (int i = 0; i < kNumMfcc; ++i) lld.column_names.push_back("mfcc" + std::to_string(i));
  for (const char* n : {"centroid", "flux", "entropy", "flatness", "f0", "voicing"})
    lld.column_names.push_back(n);
  lld.n_cols = lld.column_names.size();
  lld.n_frames = rect.n_frames;
  lld.values.assign(lld.n_frames * lld.n_cols, 0.0);

  std::vector<double> prev_norm(spec.n_bins, 0.0);
  bool have_prev = false;
  for (std::size_t t = 0; t < rect.n_frames; ++t) {
    double* row = lld.values.data() + t * lld.n_cols;
    auto frame = rect.frame(t);
    double energy = 0.0;
    for (double x : frame) energy += x * x;
    row[0] = energy / static_cast<double>(rect.frame_len);
    int crossings = 0;
    for (std::size_t i = 1; i < frame.size(); ++i)
      if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++crossings;
    row[1] = static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);

    auto power = spec.power_frame(t);
    const auto mfcc = mfcc_from_power(power, bank);
    for (int i = 0; i < kNumMfcc; ++i) row[2 + i] = mfcc[i];

    double psum = 0.0, msum = 0.0, centroid_num = 0.0;
    for (int k = 0; k < spec.n_bins; ++k) {
      psum += power[k];
      const double mag = std::sqrt(power[k]);
      msum += mag;
      centroid_num += static_cast<double>(k) * mag;
    }
    const std::size_t base = 2 + kNumMfcc;
    if (psum > 0.0) {
      row[base + 0] = centroid_num / msum;
      double flux = 0.0;
      std::vector<double> norm(spec.n_bins);
      for (int k = 0; k < spec.n_bins; ++k) norm[k] = power[k] / psum;
      if (have_prev) {
        for (int k = 0; k < spec.n_bins; ++k) {
          const double d = norm[k] - prev_norm[k];
          flux += d * d;
        }
        flux = std::sqrt(flux);
      }
      row[base + 1] = flux;
      double h = 0.0, log_gm = 0.0;
      for (int k = 0; k < spec.n_bins; ++k) {
        if (norm[k] > 0.0) h -= norm[k] * std::log(norm[k]);
        log_gm += std::log(std::max(power[k], 1e-12));
      }
      row[base + 2] = h / std::log(static_cast<double>(spec.n_bins));
      row[base + 3] = std::clamp(
          std::exp(log_gm / spec.n_bins) / (psum / spec.n_bins), 0.0, 1.0);
      prev_norm = std::move(norm);
      have_prev = true;
    } else {
      have_prev = false;
    }
    row[base + 4] = track.f0_hz[t];
    row[base + 5] = track.voicing_strength[t];
  }

  // Functionals: mean, std, min, max, range per column.
  lld.functionals.reserve(lld.n_cols * 5);
  for (std::size_t c = 0; c < lld.n_cols; ++c) {
    double mean = 0.0, mn = lld.at(0, c), mx = lld.at(0, c);
    for (std::size_t t = 0; t < lld.n_frames; ++t) {
      const double v = lld.at(t, c);
      mean += v;
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    mean /= static_cast<double>(lld.n_frames);
    double var = 0.0;
    for (std::size_t t = 0; t < lld.n_frames; ++t) {
      const double d = lld.at(t, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(lld.n_frames);
    for (const char* f : {"mean", "std", "min", "max", "range"})
      lld.functional_names.push_back(lld.column_names[c] + "_" + f);
    lld.functionals.push_back(mean);
    lld.functionals.push_back(std::sqrt(var));
    lld.functionals.push_back(mn);
    lld.functionals.push_back(mx);
    lld.functionals.push_back(mx - mn);
  }
  return lld;
}

// DCT-decorrelated LLD functionals truncated to `keep`, curated tail appended.
inline std::vector<double> assemble_feature_vector(const CuratedFeatures& curated,
                                                   const LldMatrix& lld, std::size_t keep) {
  if (keep > lld.functionals.size())
    throw Error(ErrorCode::KeepTooLarge, "keep exceeds LLD functional length");
  std::vector<double> v = dct_2(lld.functionals, keep);
  const auto tail = curated.to_vector();
  v.insert(v.end(), tail.begin(), tail.end());
  return v;
}

inline std::size_t effective_keep(const FeaturesConfig& cfg, const LldMatrix& lld) {
  return std::min<std::size_t>(cfg.keep, lld.functionals.size());
}

}  // namespace papc
