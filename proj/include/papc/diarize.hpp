#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "papc/audio_io.hpp"
#include "papc/common.hpp"
#include "papc/dsp_core.hpp"
#include "papc/features.hpp"
#include "papc/vad.hpp"

namespace papc {

struct DiarizeConfig {
  int min_turn_frames = 50;   // ~0.5 s minimum speaker turn
  int smooth_frames = 25;     // median filter width over labels
  int max_iter = 20;
  int kmeans_iters = 50;
  double separation_threshold = 3.0;  // projected mean gap in within-class sigmas
  unsigned seed = 42;
};

struct SpeakerSegment {
  std::size_t start_frame = 0;  // inclusive, original clip frame index
  std::size_t end_frame = 0;    // exclusive
  int speaker_id = 0;           // 0 -> S1, 1 -> S2
};

struct DiarizationResult {
  std::vector<SpeakerSegment> segments;
  std::vector<int> frame_labels;          // per speech frame, order of speech frames
  std::vector<std::size_t> speech_frames; // original frame indices
  bool single_speaker_fallback = false;
};

namespace detail {

// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12)
      throw Error(ErrorCode::SingularScatter, "within-class scatter is singular");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

inline std::vector<int> median_smooth(const std::vector<int>& labels, int width) {
  if (width < 3) return labels;
  const int half = width / 2;
  const int n = static_cast<int>(labels.size());
  std::vector<int> out(labels.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    int ones = 0;
    for (int j = lo; j <= hi; ++j) ones += labels[j];
    const int count = hi - lo + 1;
    if (2 * ones > count)
      out[i] = 1;
    else if (2 * ones < count)
      out[i] = 0;
    else
      out[i] = labels[i];  // tie keeps the current label
  }
  return out;
}

inline std::size_t count_flips(const std::vector<int>& labels) {
  std::size_t flips = 0;
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[i - 1]) ++flips;
  return flips;
}

}  // namespace detail

// Fisher discriminant direction w ~ Sw^-1 (mu1 - mu2), unit length.
inline std::vector<double> fld_axis(const std::vector<std::vector<double>>& features,
                                    const std::vector<int>& labels, double ridge = 1e-6) {
  if (features.size() != labels.size() || features.empty())
    throw Error(ErrorCode::InvalidArgument, "features/labels size mismatch");
  const std::size_t dim = features[0].size();
  std::vector<double> mu0(dim, 0.0), mu1(dim, 0.0);
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& mu = labels[i] == 0 ? mu0 : mu1;
    for (std::size_t d = 0; d < dim; ++d) mu[d] += features[i][d];
    (labels[i] == 0 ? n0 : n1)++;
  }
  if (n0 == 0 || n1 == 0)
    throw Error(ErrorCode::DegenerateClusters, "a class is empty");
  for (std::size_t d = 0; d < dim; ++d) {
    mu0[d] /= static_cast<double>(n0);
    mu1[d] /= static_cast<double>(n1);
  }
  double sep = 0.0;
  for (std::size_t d = 0; d < dim; ++d) sep += (mu0[d] - mu1[d]) * (mu0[d] - mu1[d]);
  if (sep < 1e-18) throw Error(ErrorCode::DegenerateMeans, "class means coincide");

  std::vector<std::vector<double>> sw(dim, std::vector<double>(dim, 0.0));
  std::vector<double> diff(dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& mu = labels[i] == 0 ? mu0 : mu1;
    for (std::size_t d = 0; d < dim; ++d) diff[d] = features[i][d] - mu[d];
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) sw[r][c] += diff[r] * diff[c];
  }
  for (std::size_t d = 0; d < dim; ++d) sw[d][d] += ridge;

  std::vector<double> rhs(dim);
  for (std::size_t d = 0; d < dim; ++d) rhs[d] = mu0[d] - mu1[d];
  std::vector<double> w = detail::solve_linear(std::move(sw), std::move(rhs));
  double norm = 0.0;
  for (double v : w) norm += v * v;
  norm = std::sqrt(norm);
  if (norm <= 0.0) throw Error(ErrorCode::SingularScatter, "zero discriminant direction");
  for (double& v : w) v /= norm;
  return w;
}

// Fisher criterion of direction w on a labeled set; used by tests and
// by callers that want to sanity-check the axis.
inline double fisher_criterion(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels,
                               const std::vector<double>& w) {
  double m0 = 0.0, m1 = 0.0;
  std::size_t n0 = 0, n1 = 0;
  std::vector<double> proj(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    double p = 0.0;
    for (std::size_t d = 0; d < w.size(); ++d) p += features[i][d] * w[d];
    proj[i] = p;
    if (labels[i] == 0) {
      m0 += p;
      ++n0;
    } else {
      m1 += p;
      ++n1;
    }
  }
  if (n0 == 0 || n1 == 0) return 0.0;
  m0 /= static_cast<double>(n0);
  m1 /= static_cast<double>(n1);
  double s = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double m = labels[i] == 0 ? m0 : m1;
    s += (proj[i] - m) * (proj[i] - m);
  }
  if (s <= 0.0) s = 1e-18;
  return (m0 - m1) * (m0 - m1) / s;
}

namespace detail {

inline std::vector<int> kmeans2(const std::vector<std::vector<double>>& x,
                                std::mt19937& rng, int iters) {
  const std::size_t n = x.size();
  const std::size_t dim = x[0].size();
  auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  };
  // k-means++ seeding, k = 2
  std::uniform_int_distribution<std::size_t> uni(0, n - 1);
  std::vector<std::vector<double>> centers(2);
  centers[0] = x[uni(rng)];
  std::vector<double> d2(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = dist2(x[i], centers[0]);
    total += d2[i];
  }
  if (total <= 0.0) {
    centers[1] = centers[0];
  } else {
    std::uniform_real_distribution<double> ud(0.0, total);
    double target = ud(rng), run = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      run += d2[i];
      if (run >= target) {
        pick = i;
        break;
      }
    }
    centers[1] = x[pick];
  }

  std::vector<int> labels(n, 0);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int l = dist2(x[i], centers[0]) <= dist2(x[i], centers[1]) ? 0 : 1;
      if (l != labels[i]) {
        labels[i] = l;
        changed = true;
      }
    }
    for (int c = 0; c < 2; ++c) {
      std::vector<double> mu(dim, 0.0);
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == c) {
          for (std::size_t d = 0; d < dim; ++d) mu[d] += x[i][d];
          ++cnt;
        }
      if (cnt > 0) {
        for (std::size_t d = 0; d < dim; ++d) mu[d] /= static_cast<double>(cnt);
        centers[c] = std::move(mu);
      }
    }
    if (!changed) break;
  }
  return labels;
}

}  // namespace detail

// Two-speaker segmentation: MFCCs on speech frames, k-means++ start, then
// iterative Fisher-axis relabeling with median smoothing, short runs merged.
inline DiarizationResult diarize(const AudioClip& clip, const VadDecision& vad,
                                 const DiarizeConfig& cfg = {}) {
  const FrameSeries frames = frame_signal(clip, Window::Hann);
  if (frames.n_frames != vad.speech_flags.size())
    throw Error(ErrorCode::LengthMismatch, "VAD decision does not match clip framing");

  DiarizationResult res;
  for (std::size_t t = 0; t < frames.n_frames; ++t)
    if (vad.speech_flags[t]) res.speech_frames.push_back(t);
  const std::size_t n = res.speech_frames.size();
  if (n < 2 * static_cast<std::size_t>(cfg.min_turn_frames))
    throw Error(ErrorCode::TooLittleSpeech,
                std::to_string(n) + " speech frames, need " +
                    std::to_string(2 * cfg.min_turn_frames));

  const Spectrogram spec = stft(frames);
  const auto bank =
      mel_filterbank(kNumMelFilters, spec.n_bins, spec.bin_hz, 50.0, kSampleRateHz / 2.0);
  std::vector<std::vector<double>> mfcc(n);
  for (std::size_t i = 0; i < n; ++i)
    mfcc[i] = mfcc_from_power(spec.power_frame(res.speech_frames[i]), bank);

  std::mt19937 rng(cfg.seed);
  std::vector<int> labels = detail::kmeans2(mfcc, rng, cfg.kmeans_iters);

  auto single_speaker = [&]() {
    res.single_speaker_fallback = true;
    res.frame_labels.assign(n, 0);
    res.segments = {{res.speech_frames.front(), res.speech_frames.back() + 1, 0}};
    return res;
  };

  double separation = 0.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    std::vector<double> w;
    try {
      w = fld_axis(mfcc, labels);
    } catch (const Error&) {
      return single_speaker();
    }
    double m0 = 0.0, m1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    std::vector<double> proj(n);
    for (std::size_t i = 0; i < n; ++i) {
      double p = 0.0;
      for (std::size_t d = 0; d < w.size(); ++d) p += mfcc[i][d] * w[d];
      proj[i] = p;
      if (labels[i] == 0) {
        m0 += p;
        ++n0;
      } else {
        m1 += p;
        ++n1;
      }
    }
    m0 /= static_cast<double>(n0);
    m1 /= static_cast<double>(n1);
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = proj[i] - (labels[i] == 0 ? m0 : m1);
      (labels[i] == 0 ? v0 : v1) += d * d;
    }
    separation = std::abs(m0 - m1) /
                 std::sqrt(0.5 * (v0 / n0 + v1 / n1) + 1e-300);
    std::vector<int> relabeled(n);
    for (std::size_t i = 0; i < n; ++i)
      relabeled[i] = std::abs(proj[i] - m0) <= std::abs(proj[i] - m1) ? 0 : 1;
    std::vector<int> smoothed = detail::median_smooth(relabeled, cfg.smooth_frames);
    if (smoothed == labels) break;
    labels = std::move(smoothed);
  }
  if (std::count(labels.begin(), labels.end(), 0) == 0 ||
      std::count(labels.begin(), labels.end(), 1) == 0)
    return single_speaker();
  // A weak projected separation means the split only carved up one source.
  if (separation < cfg.separation_threshold) return single_speaker();

  // Absorb runs shorter than the minimum turn into their neighbors.
  struct Run {
    std::size_t start, len;
    int label;
  };
  auto collect_runs = [&](const std::vector<int>& ls) {
    std::vector<Run> runs;
    for (std::size_t i = 0; i < ls.size();) {
      std::size_t j = i;
      while (j < ls.size() && ls[j] == ls[i]) ++j;
      runs.push_back({i, j - i, ls[i]});
      i = j;
    }
    return runs;
  };
  std::vector<Run> runs = collect_runs(labels);
  while (runs.size() > 1) {
    std::size_t shortest = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
      if (runs[i].len < runs[shortest].len) shortest = i;
    if (runs[shortest].len >= static_cast<std::size_t>(cfg.min_turn_frames)) break;
    const int absorber = shortest > 0 ? runs[shortest - 1].label : runs[shortest + 1].label;
    for (std::size_t i = runs[shortest].start; i < runs[shortest].start + runs[shortest].len; ++i)
      labels[i] = absorber;
    runs = collect_runs(labels);
  }
  if (std::count(labels.begin(), labels.end(), 0) == 0 ||
      std::count(labels.begin(), labels.end(), 1) == 0)
    return single_speaker();

  res.frame_labels = labels;
  for (const Run& r : runs) {
    SpeakerSegment seg;
    seg.start_frame = res.speech_frames[r.start];
    seg.end_frame = res.speech_frames[r.start + r.len - 1] + 1;
    seg.speaker_id = r.label;
    res.segments.push_back(seg);
  }
  return res;
}

}  // namespace papc
