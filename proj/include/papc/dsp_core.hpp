#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "papc/audio_io.hpp"
#include "papc/common.hpp"

namespace papc {

enum class Window { Rect, Hann };

inline const char* window_name(Window w) { return w == Window::Hann ? "hann" : "rect"; }

// Fixed-length analysis frames stored as one flat row-major buffer.
struct FrameSeries {
  std::vector<double> data;
  int frame_len = kFrameLen;
  int hop = kHop;
  std::size_t n_frames = 0;
  Window window_fn = Window::Rect;

  std::span<const double> frame(std::size_t t) const {
    return {data.data() + t * frame_len, static_cast<std::size_t>(frame_len)};
  }
  std::span<double> frame(std::size_t t) {
    return {data.data() + t * frame_len, static_cast<std::size_t>(frame_len)};
  }
};

// Frame count rule: floor((N - frame_len)/hop) + 1 full frames for
// N >= frame_len; a single zero-padded frame otherwise.
inline std::size_t frame_count(std::size_t n_samples, int frame_len = kFrameLen,
                               int hop = kHop) {
  if (n_samples < static_cast<std::size_t>(frame_len)) return 1;
  return (n_samples - frame_len) / hop + 1;
}

inline std::vector<double> hann_window(int len) {
  std::vector<double> w(len);
  for (int n = 0; n < len; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (len - 1));
  return w;
}

inline FrameSeries frame_signal(const AudioClip& clip, Window window_fn,
                                int frame_len = kFrameLen, int hop = kHop) {
  if (clip.samples.empty()) throw Error(ErrorCode::EmptyClip, "cannot frame an empty clip");
  const std::size_t n = clip.samples.size();
  FrameSeries fs;
  fs.frame_len = frame_len;
  fs.hop = hop;
  fs.window_fn = window_fn;
  fs.n_frames = frame_count(n, frame_len, hop);
  fs.data.assign(fs.n_frames * frame_len, 0.0);
  std::vector<double> win;
  if (window_fn == Window::Hann) win = hann_window(frame_len);
  for (std::size_t t = 0; t < fs.n_frames; ++t) {
    const std::size_t start = t * hop;
    auto dst = fs.frame(t);
    const std::size_t avail = std::min<std::size_t>(frame_len, n - std::min(n, start));
    for (std::size_t i = 0; i < avail; ++i) dst[i] = clip.samples[start + i];
    if (window_fn == Window::Hann)
      for (int i = 0; i < frame_len; ++i) dst[i] *= win[i];
  }
  return fs;
}

// In-place iterative radix-2 FFT. Inverse includes the 1/N factor.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw Error(ErrorCode::InvalidArgument, "FFT size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / len;
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

// One-sided spectra per frame, bins 0..fft_size/2, flat row-major.
struct Spectrogram {
  std::vector<double> mag;
  std::vector<double> power;
  std::size_t n_frames = 0;
  int fft_size = kFftSize;
  int n_bins = kNumBins;
  double bin_hz = kBinHz;

  std::span<const double> mag_frame(std::size_t t) const {
    return {mag.data() + t * n_bins, static_cast<std::size_t>(n_bins)};
  }
  std::span<const double> power_frame(std::size_t t) const {
    return {power.data() + t * n_bins, static_cast<std::size_t>(n_bins)};
  }
};

// Full complex one-sided STFT of a frame; used where phase is needed.
inline std::vector<std::complex<double>> stft_frame(std::span<const double> frame,
                                                    int fft_size = kFftSize) {
  if (static_cast<int>(frame.size()) > fft_size)
    throw Error(ErrorCode::InvalidArgument, "frame longer than FFT size");
  std::vector<std::complex<double>> buf(fft_size, {0.0, 0.0});
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft_radix2(buf, false);
  buf.resize(fft_size / 2 + 1);
  return buf;
}

inline Spectrogram stft(const FrameSeries& frames, int fft_size = kFftSize) {
  if (frames.frame_len > fft_size)
    throw Error(ErrorCode::InvalidArgument, "frame_len exceeds FFT size");
  Spectrogram spec;
  spec.n_frames = frames.n_frames;
  spec.fft_size = fft_size;
  spec.n_bins = fft_size / 2 + 1;
  spec.bin_hz = static_cast<double>(kSampleRateHz) / fft_size;
  spec.mag.resize(spec.n_frames * spec.n_bins);
  spec.power.resize(spec.n_frames * spec.n_bins);
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    auto bins = stft_frame(frames.frame(t), fft_size);
    double* m = spec.mag.data() + t * spec.n_bins;
    double* p = spec.power.data() + t * spec.n_bins;
    for (int k = 0; k < spec.n_bins; ++k) {
      const double re = bins[k].real(), im = bins[k].imag();
      p[k] = re * re + im * im;
      m[k] = std::sqrt(p[k]);
    }
  }
  return spec;
}

// Normalized (biased) autocorrelation: R[0] = 1, |R[l]| <= 1.
inline std::vector<double> autocorrelation(std::span<const double> frame, int max_lag) {
  if (max_lag >= static_cast<int>(frame.size()))
    throw Error(ErrorCode::InvalidArgument, "max_lag must be below frame length");
  double e0 = 0.0;
  for (double x : frame) e0 += x * x;
  if (e0 <= 0.0) throw Error(ErrorCode::SilentFrame, "all-zero frame has no autocorrelation");
  std::vector<double> r(max_lag + 1);
  r[0] = 1.0;
  const std::size_t n = frame.size();
  for (int l = 1; l <= max_lag; ++l) {
    double s = 0.0;
    for (std::size_t i = 0; i + l < n; ++i) s += frame[i] * frame[i + l];
    r[l] = s / e0;
  }
  return r;
}

// Orthonormal DCT-II, first `keep` coefficients.
inline std::vector<double> dct_2(std::span<const double> v, std::size_t keep) {
  const std::size_t n = v.size();
  if (keep > n) throw Error(ErrorCode::KeepTooLarge, "keep exceeds input length");
  std::vector<double> out(keep, 0.0);
  const double s0 = std::sqrt(1.0 / n);
  const double sk = std::sqrt(2.0 / n);
  for (std::size_t k = 0; k < keep; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += v[i] * std::cos(std::numbers::pi * (i + 0.5) * k / n);
    out[k] = (k == 0 ? s0 : sk) * acc;
  }
  return out;
}

inline std::vector<double> idct_2(std::span<const double> c, std::size_t n) {
  if (c.size() > n) throw Error(ErrorCode::InvalidArgument, "more coefficients than samples");
  std::vector<double> out(n, 0.0);
  const double s0 = std::sqrt(1.0 / n);
  const double sk = std::sqrt(2.0 / n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k)
      acc += (k == 0 ? s0 : sk) * c[k] * std::cos(std::numbers::pi * (i + 0.5) * k / n);
    out[i] = acc;
  }
  return out;
}

// Linear-interpolation percentile: rank r = p/100*(n-1) between order statistics.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptySequence, "percentile of empty sequence");
  if (p < 0.0 || p > 100.0)
    throw Error(ErrorCode::InvalidArgument, "percentile p outside [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double r = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(r));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(r));
  if (lo == hi) return sorted[lo];
  const double frac = r - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace papc
