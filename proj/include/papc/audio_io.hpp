#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "papc/common.hpp"

namespace papc {

// Mono PCM clip, amplitudes in [-1, 1]. Immutable by convention once built.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  std::string source_id;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline double bessel_i0(double x) {
  // Power series; converges quickly for the beta range used here.
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < sum * 1e-14) break;
  }
  return sum;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Reads RIFF/WAVE PCM (8/16/24-bit) or IEEE float, 1-2 channels.
// Channels are averaged; amplitudes scaled to [-1, 1].
inline AudioClip load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::MalformedWav, path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    std::uint32_t chunk_len = detail::read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) {
      // Tolerate a truncated final data chunk only.
      if (std::memcmp(id, "data", 4) == 0)
        chunk_len = static_cast<std::uint32_t>(bytes.size() - body);
      else
        throw Error(ErrorCode::MalformedWav, "chunk overruns file in " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw Error(ErrorCode::MalformedWav, "fmt chunk too short");
      format = detail::read_u16(bytes.data() + body);
      channels = detail::read_u16(bytes.data() + body + 2);
      rate = detail::read_u32(bytes.data() + body + 4);
      bits = detail::read_u16(bytes.data() + body + 14);
      if (format == 0xFFFE) {  // WAVE_FORMAT_EXTENSIBLE: sub-format leads the GUID
        if (chunk_len < 40) throw Error(ErrorCode::MalformedWav, "extensible fmt too short");
        format = detail::read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0)
    throw Error(ErrorCode::MalformedWav, "missing fmt or data chunk in " + path);
  if (format != 1 && format != 3)
    throw Error(ErrorCode::UnsupportedEncoding,
                "compressed or unknown codec (format tag " + std::to_string(format) + ")");
  if (channels < 1 || channels > 2)
    throw Error(ErrorCode::UnsupportedEncoding,
                std::to_string(channels) + " channels (only mono/stereo supported)");
  if (rate == 0) throw Error(ErrorCode::MalformedWav, "zero sample rate");
  if (format == 1 && bits != 8 && bits != 16 && bits != 24)
    throw Error(ErrorCode::UnsupportedEncoding, "PCM bit depth " + std::to_string(bits));
  if (format == 3 && bits != 32 && bits != 64)
    throw Error(ErrorCode::UnsupportedEncoding, "float bit depth " + std::to_string(bits));

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t stride = bytes_per_sample * channels;
  const std::size_t n_frames = stride > 0 ? data_len / stride : 0;

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.source_id = path;
  clip.samples.resize(n_frames);

  const unsigned char* d = bytes.data() + data_off;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* s = d + i * stride + c * bytes_per_sample;
      double v = 0.0;
      if (format == 1 && bits == 16) {
        v = static_cast<std::int16_t>(detail::read_u16(s)) / 32768.0;
      } else if (format == 1 && bits == 8) {
        v = (static_cast<int>(*s) - 128) / 128.0;
      } else if (format == 1 && bits == 24) {
        std::int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
        if (raw & 0x800000) raw |= ~0xFFFFFF;
        v = raw / 8388608.0;
      } else if (format == 3 && bits == 32) {
        float fv;
        std::memcpy(&fv, s, 4);
        v = fv;
      } else {  // format == 3, bits == 64
        double dv;
        std::memcpy(&dv, s, 8);
        v = dv;
      }
      acc += v;
    }
    clip.samples[i] = std::clamp(acc / channels, -1.0, 1.0);
  }
  return clip;
}

// Writes 16-bit PCM mono. Quantization happens only here.
inline void write_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  const std::uint32_t data_len = n * 2;
  const std::uint32_t riff_len = 36 + data_len;
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    f.write(reinterpret_cast<char*>(b), 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF)};
    f.write(reinterpret_cast<char*>(b), 2);
  };
  f.write("RIFF", 4);
  put_u32(riff_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<std::uint32_t>(clip.sample_rate_hz));
  put_u32(static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put_u16(2);
  put_u16(16);
  f.write("data", 4);
  put_u32(data_len);
  for (double x : clip.samples) {
    long q = std::lround(x * 32768.0);
    q = std::clamp(q, -32768L, 32767L);
    put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path);
}

// Rational polyphase windowed-sinc resampler. Kaiser beta 8.6 keeps the
// stopband near -90 dB, well past the 60 dB the pipeline needs.
inline std::vector<double> resample(const std::vector<double>& x, int rate_in, int rate_out) {
  if (rate_in <= 0 || rate_out <= 0)
    throw Error(ErrorCode::InvalidArgument, "sample rates must be positive");
  if (rate_in == rate_out) return x;
  if (x.empty()) return {};

  const long long g = std::gcd(static_cast<long long>(rate_in), static_cast<long long>(rate_out));
  const long long up = rate_out / g;    // L
  const long long down = rate_in / g;   // M

  const double scale = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const double cutoff = 0.92 * scale;   // relative to input Nyquist
  constexpr int kHalfLobes = 16;
  constexpr double kBeta = 8.6;
  const int half = static_cast<int>(std::ceil(kHalfLobes / cutoff));
  const double i0_beta = detail::bessel_i0(kBeta);

  auto kernel = [&](double u) {
    const double q = u / half;
    if (q <= -1.0 || q >= 1.0) return 0.0;
    const double win = detail::bessel_i0(kBeta * std::sqrt(1.0 - q * q)) / i0_beta;
    return cutoff * detail::sinc(cutoff * u) * win;
  };

  const std::size_t n_in = x.size();
  const std::size_t n_out =
      static_cast<std::size_t>((static_cast<long long>(n_in) * up + down - 1) / down);
  std::vector<double> y(n_out, 0.0);

  // Fractional input offsets repeat with period L; precompute tap tables.
  const bool use_table = up <= 4096;
  std::vector<std::vector<double>> taps;
  if (use_table) {
    taps.resize(up, std::vector<double>(2 * half + 1));
    for (long long ph = 0; ph < up; ++ph) {
      const double frac = static_cast<double>(ph * down % up) / up;
      for (int j = -half; j <= half; ++j) taps[ph][j + half] = kernel(frac + j);
    }
  }

  for (std::size_t m = 0; m < n_out; ++m) {
    const long long num = static_cast<long long>(m) * down;
    const long long base = num / up;          // floor(t)
    const double frac = static_cast<double>(num % up) / up;
    double acc = 0.0;
    if (use_table) {
      const auto& h = taps[m % up];
      for (int j = -half; j <= half; ++j) {
        const long long k = base - j;
        if (k >= 0 && k < static_cast<long long>(n_in)) acc += x[k] * h[j + half];
      }
    } else {
      for (int j = -half; j <= half; ++j) {
        const long long k = base - j;
        if (k >= 0 && k < static_cast<long long>(n_in)) acc += x[k] * kernel(frac + j);
      }
    }
    y[m] = acc;
  }
  return y;
}

// Converts any clip to the canonical 11025 Hz format. A clip already at
// 11025 Hz comes back bit-identical.
inline AudioClip canonicalize(const AudioClip& clip) {
  if (clip.samples.empty()) throw Error(ErrorCode::EmptyClip, "cannot canonicalize " + clip.source_id);
  if (clip.sample_rate_hz == kSampleRateHz) return clip;
  AudioClip out;
  out.sample_rate_hz = kSampleRateHz;
  out.source_id = clip.source_id;
  out.samples = resample(clip.samples, clip.sample_rate_hz, kSampleRateHz);
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

}  // namespace papc
