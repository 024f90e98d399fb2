#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "papc/features.hpp"
#include "support/synth.hpp"

using namespace papc;

namespace {

PitchTrack track_from_periods(const std::vector<double>& periods_s) {
  PitchTrack t;
  for (double p : periods_s) {
    t.voiced.push_back(true);
    t.period_s.push_back(p);
    t.f0_hz.push_back(1.0 / p);
    t.voicing_strength.push_back(0.9);
  }
  return t;
}

PitchTrack track_from_f0(const std::vector<double>& f0) {
  PitchTrack t;
  for (double f : f0) {
    t.voiced.push_back(true);
    t.f0_hz.push_back(f);
    t.period_s.push_back(1.0 / f);
    t.voicing_strength.push_back(0.9);
  }
  return t;
}

Spectrogram spectrogram_from_rows(const std::vector<std::vector<double>>& mag_rows) {
  Spectrogram s;
  s.n_frames = mag_rows.size();
  s.n_bins = static_cast<int>(mag_rows[0].size());
  s.fft_size = (s.n_bins - 1) * 2;
  s.bin_hz = static_cast<double>(kSampleRateHz) / s.fft_size;
  for (const auto& row : mag_rows)
    for (double m : row) {
      s.mag.push_back(m);
      s.power.push_back(m * m);
    }
  return s;
}

}  // namespace

TEST_CASE("sawtooth pitch lands on the fundamental") {
  AudioClip clip = synth::make_clip(synth::sawtooth(200.0, 1.0, kSampleRateHz, 0.8));
  const PitchTrack track = track_pitch(clip);
  auto f0 = track.voiced_f0();
  REQUIRE(f0.size() > 10);
  std::sort(f0.begin(), f0.end());
  const double median = f0[f0.size() / 2];
  CHECK(median >= 198.0);
  CHECK(median <= 202.0);
  for (std::size_t t = 0; t < track.voiced.size(); ++t) {
    if (!track.voiced[t]) continue;
    CHECK(track.f0_hz[t] >= 50.0);
    CHECK(track.f0_hz[t] <= 500.0);
    CHECK_THAT(track.period_s[t] * track.f0_hz[t], Catch::Matchers::WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("white noise is mostly unvoiced") {
  int ok = 0;
  for (unsigned trial = 0; trial < 20; ++trial) {
    AudioClip clip = synth::make_clip(synth::white_noise(kSampleRateHz, 500 + trial, 0.8));
    const PitchTrack track = track_pitch(clip);
    const std::size_t unvoiced = track.voiced.size() - track.voiced_count();
    if (unvoiced * 10 >= track.voiced.size() * 9) ++ok;
  }
  CHECK(ok == 20);
}

TEST_CASE("silence has no voiced frames") {
  AudioClip clip = synth::make_clip(std::vector<double>(22050, 0.0));
  const PitchTrack track = track_pitch(clip);
  CHECK(track.voiced_count() == 0);
}

TEST_CASE("absolute jitter follows the printed form") {
  CHECK(jitter_abs_s(track_from_periods({0.005, 0.005, 0.005})) == 0.0);
  CHECK_THAT(jitter_abs_s(track_from_periods({0.005, 0.006})),
             Catch::Matchers::WithinAbs(0.0005, 1e-15));  // (1/2)|5ms-6ms|

  // brute-force oracle on a random 100-period track
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ud(0.002, 0.02);
  std::vector<double> periods(100);
  for (double& p : periods) p = ud(rng);
  double oracle = 0.0;
  for (std::size_t j = 0; j + 1 < periods.size(); ++j)
    oracle += std::abs(periods[j] - periods[j + 1]);
  oracle /= static_cast<double>(periods.size());
  CHECK_THAT(jitter_abs_s(track_from_periods(periods)),
             Catch::Matchers::WithinAbs(oracle, 1e-12));

  // M-1 divisor is one config switch away
  CHECK_THAT(jitter_abs_s(track_from_periods(periods), JitterDivisor::MMinus1),
             Catch::Matchers::WithinAbs(oracle * 100.0 / 99.0, 1e-12));

  bool flagged = false;
  CHECK(jitter_abs_s(track_from_periods({0.005}), JitterDivisor::M, &flagged) == 0.0);
  CHECK(flagged);
}

TEST_CASE("relative jitter is a percentage and scale invariant") {
  CHECK(jitter_rel_pct(track_from_periods({0.004, 0.004, 0.004})) == 0.0);
  CHECK_THAT(jitter_rel_pct(track_from_periods({0.005, 0.006})),
             Catch::Matchers::WithinAbs(20.0, 1e-12));

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ud(0.002, 0.02);
  std::vector<double> periods(60), doubled(60);
  for (std::size_t i = 0; i < periods.size(); ++i) {
    periods[i] = ud(rng);
    doubled[i] = 2.0 * periods[i];
  }
  CHECK_THAT(jitter_rel_pct(track_from_periods(doubled)),
             Catch::Matchers::WithinAbs(jitter_rel_pct(track_from_periods(periods)), 1e-9));
}

TEST_CASE("shimmer reduces to the printed arithmetic") {
  // two non-overlapping voiced frames with peak amplitudes 1 and 0.1
  const std::size_t n_frames = 12;
  std::vector<double> samples((n_frames - 1) * kHop + kFrameLen, 0.0);
  PitchTrack track;
  track.voiced.assign(n_frames, false);
  track.f0_hz.assign(n_frames, 0.0);
  track.period_s.assign(n_frames, 0.0);
  track.voicing_strength.assign(n_frames, 0.0);
  track.voiced[0] = true;
  samples[200] = 1.0;
  track.voiced[8] = true;
  samples[8 * kHop + 200] = 0.1;
  AudioClip clip = synth::make_clip(std::move(samples));
  CHECK_THAT(shimmer_db(clip, track), Catch::Matchers::WithinAbs(10.0, 1e-12));
}

TEST_CASE("constant amplitude means zero shimmer") {
  AudioClip clip = synth::make_clip(synth::sawtooth(150.0, 1.0, kSampleRateHz, 0.7));
  const PitchTrack track = track_pitch(clip);
  REQUIRE(track.voiced_count() >= 2);
  CHECK(shimmer_db(clip, track) < 0.2);  // tiny framing residue only
}

TEST_CASE("shimmer matches a direct-sum oracle and scale invariance") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  const std::size_t m = 20;
  // spikes spaced 4 frames apart so frame windows never share a spike
  const std::size_t spacing = 4;
  const std::size_t n_frames = m * spacing;
  std::vector<double> samples((n_frames - 1) * kHop + kFrameLen, 0.0);
  PitchTrack track;
  track.voiced.assign(n_frames, false);
  track.f0_hz.assign(n_frames, 0.0);
  track.period_s.assign(n_frames, 0.0);
  track.voicing_strength.assign(n_frames, 0.0);
  std::vector<double> amps(m);
  for (std::size_t i = 0; i < m; ++i) {
    amps[i] = ud(rng);
    const std::size_t frame = i * spacing;
    track.voiced[frame] = true;
    samples[frame * kHop + 250] = amps[i];
  }
  AudioClip clip = synth::make_clip(samples);
  double oracle = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) oracle += std::abs(std::log10(amps[i] / amps[i + 1]));
  oracle *= 20.0 / static_cast<double>(m);
  CHECK_THAT(shimmer_db(clip, track), Catch::Matchers::WithinAbs(oracle, 1e-12));

  AudioClip scaled = clip;
  for (double& x : scaled.samples) x *= 0.37;
  CHECK_THAT(shimmer_db(scaled, track), Catch::Matchers::WithinAbs(oracle, 1e-9));
}

TEST_CASE("frequency modulation spans zero to one") {
  CHECK(freq_modulation(track_from_f0({220.0, 220.0, 220.0})) == 0.0);
  CHECK_THAT(freq_modulation(track_from_f0({100.0, 300.0})),
             Catch::Matchers::WithinAbs(0.5, 1e-12));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ud(50.0, 500.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> f0(10), scaled(10);
    for (std::size_t i = 0; i < f0.size(); ++i) {
      f0[i] = ud(rng);
      scaled[i] = 1.7 * f0[i];
    }
    const double v = freq_modulation(track_from_f0(f0));
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    // uniform scaling of all frequencies leaves the ratio unchanged
    CHECK_THAT(freq_modulation(track_from_f0(scaled)), Catch::Matchers::WithinAbs(v, 1e-12));
  }
}

TEST_CASE("frequency range uses the percentile rule") {
  CHECK(freq_range_hz(track_from_f0(std::vector<double>(20, 200.0))) == 0.0);
  std::vector<double> ramp(100);
  for (int i = 0; i < 100; ++i) ramp[i] = 100.0 + i;
  CHECK_THAT(freq_range_hz(track_from_f0(ramp)), Catch::Matchers::WithinAbs(89.1, 1e-9));

  // a single wild outlier moves the trimmed span by less than the 5% tail
  std::vector<double> with_outlier = ramp;
  with_outlier.push_back(10000.0);
  const double before = freq_range_hz(track_from_f0(ramp));
  const double after = freq_range_hz(track_from_f0(with_outlier));
  CHECK(std::abs(after - before) < 5.0);
}

TEST_CASE("HNR formula algebra") {
  CHECK_THAT(hnr_db_from_autocorr(0.5), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(hnr_db_from_autocorr(0.9),
             Catch::Matchers::WithinAbs(10.0 * std::log10(9.0), 1e-12));
  CHECK_THAT(hnr_db_from_autocorr(0.9), Catch::Matchers::WithinAbs(9.542, 1e-3));
  // clamp keeps the dB range bounded
  CHECK(hnr_db_from_autocorr(1.5) == hnr_db_from_autocorr(1.0 - 1e-6));
  CHECK(hnr_db_from_autocorr(-0.3) == hnr_db_from_autocorr(1e-6));
}

TEST_CASE("pure tone saturates segmental HNR") {
  AudioClip clip = synth::make_clip(synth::sine(200.0, 1.0, kSampleRateHz, 0.8));
  const PitchTrack track = track_pitch(clip);
  REQUIRE(track.voiced_count() > 10);
  auto [mean, stddev] = hnr_segmental(clip, track);
  CHECK(mean >= 30.0);
  CHECK(stddev >= 0.0);
}

TEST_CASE("noisier tones score lower HNR") {
  auto samples = synth::sine(200.0, 1.0, kSampleRateHz, 0.5);
  synth::add_in_place(samples, synth::white_noise(samples.size(), 3, 0.25));
  AudioClip noisy = synth::make_clip(samples);
  const PitchTrack track = track_pitch(noisy);
  REQUIRE(track.voiced_count() > 5);
  auto [mean, stddev] = hnr_segmental(noisy, track);
  CHECK(mean < 30.0);
  CHECK(mean > -10.0);
}

TEST_CASE("spectral centroid point masses") {
  std::vector<double> row(kNumBins, 0.0);
  row[5] = 2.0;
  CHECK_THAT(spectral_centroid(spectrogram_from_rows({row})),
             Catch::Matchers::WithinAbs(5.0, 1e-12));

  std::vector<double> two(kNumBins, 0.0);
  two[2] = 1.0;
  two[4] = 1.0;
  CHECK_THAT(spectral_centroid(spectrogram_from_rows({two})),
             Catch::Matchers::WithinAbs(3.0, 1e-12));
}

TEST_CASE("spectral centroid matches the weighted-sum oracle") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<std::vector<double>> rows(4, std::vector<double>(kNumBins));
  for (auto& row : rows)
    for (double& m : row) m = ud(rng);
  const Spectrogram spec = spectrogram_from_rows(rows);
  double expect = 0.0;
  for (const auto& row : rows) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < kNumBins; ++k) {
      num += k * row[k];
      den += row[k];
    }
    expect += num / den;
  }
  expect /= rows.size();
  CHECK_THAT(spectral_centroid(spec), Catch::Matchers::WithinRel(expect, 1e-9));
}

TEST_CASE("spectral flux closed forms") {
  std::vector<double> row(kNumBins, 0.5);
  CHECK(spectral_flux(spectrogram_from_rows({row, row, row})) == 0.0);

  std::vector<double> a(kNumBins, 0.0), b(kNumBins, 0.0);
  a[10] = 3.0;  // L1-normalized power becomes a unit point mass
  b[50] = 0.7;
  CHECK_THAT(spectral_flux(spectrogram_from_rows({a, b, a, b})),
             Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("spectral flux matches the direct oracle") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  std::vector<std::vector<double>> rows(5, std::vector<double>(kNumBins));
  for (auto& row : rows)
    for (double& m : row) m = ud(rng);
  const Spectrogram spec = spectrogram_from_rows(rows);
  double expect = 0.0;
  for (std::size_t t = 1; t < rows.size(); ++t) {
    double sp = 0.0, sc = 0.0;
    for (int k = 0; k < kNumBins; ++k) {
      sp += rows[t - 1][k] * rows[t - 1][k];
      sc += rows[t][k] * rows[t][k];
    }
    double d2 = 0.0;
    for (int k = 0; k < kNumBins; ++k) {
      const double d = rows[t][k] * rows[t][k] / sc - rows[t - 1][k] * rows[t - 1][k] / sp;
      d2 += d * d;
    }
    expect += std::sqrt(d2);
  }
  expect /= static_cast<double>(rows.size() - 1);
  CHECK_THAT(spectral_flux(spec), Catch::Matchers::WithinRel(expect, 1e-9));
}

TEST_CASE("spectral entropy closed forms") {
  std::vector<double> point(kNumBins, 0.0);
  point[33] = 1.0;
  CHECK_THAT(spectral_entropy(spectrogram_from_rows({point})),
             Catch::Matchers::WithinAbs(0.0, 1e-12));

  std::vector<double> uniform(kNumBins, 0.25);
  CHECK_THAT(spectral_entropy(spectrogram_from_rows({uniform})),
             Catch::Matchers::WithinAbs(1.0, 1e-12));

  std::vector<double> two(kNumBins, 0.0);
  two[0] = 1.0;
  two[100] = 1.0;
  const double expect = std::log(2.0) / std::log(257.0);
  CHECK_THAT(spectral_entropy(spectrogram_from_rows({two})),
             Catch::Matchers::WithinAbs(expect, 1e-12));
  CHECK_THAT(spectral_entropy(spectrogram_from_rows({two})),
             Catch::Matchers::WithinAbs(0.1249, 1e-4));
}

TEST_CASE("spectral flatness closed forms and signals") {
  std::vector<double> flat(kNumBins, 0.7);
  CHECK_THAT(spectral_flatness(spectrogram_from_rows({flat})),
             Catch::Matchers::WithinAbs(1.0, 1e-12));

  std::vector<double> point(kNumBins, 0.0);
  point[40] = 1.0;
  CHECK(spectral_flatness(spectrogram_from_rows({point})) < 1e-6);

  AudioClip noise = synth::make_clip(synth::white_noise(kSampleRateHz, 10, 0.8));
  const double noise_flatness = spectral_flatness(stft(frame_signal(noise, Window::Hann)));
  CHECK(noise_flatness >= 0.5);

  AudioClip tone = synth::make_clip(synth::sine(1000.0, 1.0, kSampleRateHz, 0.8));
  const double tone_flatness = spectral_flatness(stft(frame_signal(tone, Window::Hann)));
  CHECK(tone_flatness <= 0.1);
}

TEST_CASE("entropy flatness and modulation stay in the unit interval") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<double>> rows(3, std::vector<double>(kNumBins));
    for (auto& row : rows)
      for (double& m : row) m = ud(rng);
    const Spectrogram spec = spectrogram_from_rows(rows);
    const double h = spectral_entropy(spec);
    const double f = spectral_flatness(spec);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("sharpness point-mass reductions") {
  std::vector<double> loudness(kBarkBands, 0.0);
  loudness[10] = 0.8;
  CHECK_THAT(sharpness_from_band_loudness(loudness),
             Catch::Matchers::WithinAbs(1.1, 1e-12));  // 0.11 * 10 * g(10)=1
  std::fill(loudness.begin(), loudness.end(), 0.0);
  loudness[2] = 3.0;
  CHECK_THAT(sharpness_from_band_loudness(loudness),
             Catch::Matchers::WithinAbs(0.22, 1e-12));
}

TEST_CASE("sharpness of flat loudness matches the direct band sum") {
  std::vector<double> loudness(kBarkBands, 1.0);
  double num = 0.0, den = 0.0;
  for (int b = 0; b < kBarkBands; ++b) {
    const double z = static_cast<double>(b);
    const double g = z <= 15.8 ? 1.0 : 0.15 * std::exp(0.42 * (z - 15.8)) + 0.85;
    num += 1.0 * g * z;
    den += 1.0;
  }
  CHECK_THAT(sharpness_from_band_loudness(loudness),
             Catch::Matchers::WithinAbs(0.11 * num / den, 1e-12));
}

TEST_CASE("sharpness weighting is continuous at the knee") {
  CHECK_THAT(sharpness_weight(15.8), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(sharpness_weight(15.8 + 1e-9), Catch::Matchers::WithinAbs(1.0, 1e-6));
  CHECK(sharpness_weight(23.0) > sharpness_weight(20.0));
}

TEST_CASE("sharpness of a tone rises with frequency") {
  AudioClip low = synth::make_clip(synth::sine(300.0, 0.5, kSampleRateHz, 0.8));
  AudioClip high = synth::make_clip(synth::sine(4000.0, 0.5, kSampleRateHz, 0.8));
  const double s_low = sharpness_acum(stft(frame_signal(low, Window::Hann)));
  const double s_high = sharpness_acum(stft(frame_signal(high, Window::Hann)));
  CHECK(s_high > s_low);
  // band bookkeeping: tone at 4 kHz sits in the band holding its bark rate
  const int expected_band = static_cast<int>(std::floor(bark_z(4000.0)));
  CHECK_THAT(s_high, Catch::Matchers::WithinAbs(
                         0.11 * expected_band * sharpness_weight(expected_band), 0.35));
}

TEST_CASE("LLD extraction on silence hits the documented floors") {
  AudioClip clip = synth::make_clip(std::vector<double>(11025, 0.0));
  const LldMatrix lld = extract_lld(clip);
  REQUIRE(lld.n_frames == 97);
  REQUIRE(lld.column_names.size() == lld.n_cols);
  const std::size_t energy_col = 0;
  for (std::size_t t = 0; t < lld.n_frames; ++t) CHECK(lld.at(t, energy_col) == 0.0);
  // mfcc0 floor: orthonormal DCT of a constant log(1e-10) filterbank row
  const double c0_floor = std::log(1e-10) * std::sqrt(static_cast<double>(kNumMelFilters));
  for (std::size_t t = 0; t < lld.n_frames; ++t)
    CHECK_THAT(lld.at(t, 2), Catch::Matchers::WithinRel(c0_floor, 1e-9));
}

TEST_CASE("range functional equals max minus min for every column") {
  auto samples = synth::white_noise(3 * kSampleRateHz, 12, 0.5);
  synth::add_in_place(samples, synth::sawtooth(180.0, 3.0, kSampleRateHz, 0.4));
  AudioClip clip = synth::make_clip(std::move(samples));
  const LldMatrix lld = extract_lld(clip);
  REQUIRE(lld.functionals.size() == lld.n_cols * 5);
  for (std::size_t c = 0; c < lld.n_cols; ++c) {
    const double mx = lld.functionals[c * 5 + 3];
    const double mn = lld.functionals[c * 5 + 2];
    const double range = lld.functionals[c * 5 + 4];
    CHECK_THAT(range, Catch::Matchers::WithinAbs(mx - mn, 1e-12));
    CHECK(mx >= mn);
  }
}

TEST_CASE("mel filter energies of a 1 kHz tone match the direct oracle") {
  AudioClip clip = synth::make_clip(synth::sine(1000.0, 0.5, kSampleRateHz, 0.8));
  const Spectrogram spec = stft(frame_signal(clip, Window::Hann));
  const auto bank = mel_filterbank(kNumMelFilters, spec.n_bins, spec.bin_hz, 50.0,
                                   kSampleRateHz / 2.0);
  auto power = spec.power_frame(spec.n_frames / 2);

  // independent triangle-filter oracle
  const double m_lo = 2595.0 * std::log10(1.0 + 50.0 / 700.0);
  const double m_hi = 2595.0 * std::log10(1.0 + (kSampleRateHz / 2.0) / 700.0);
  std::vector<double> edges(kNumMelFilters + 2);
  for (int i = 0; i < kNumMelFilters + 2; ++i) {
    const double mel = m_lo + (m_hi - m_lo) * i / (kNumMelFilters + 1);
    edges[i] = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  }
  std::vector<double> oracle(kNumMelFilters, 0.0);
  for (int f = 0; f < kNumMelFilters; ++f) {
    for (int k = 0; k < spec.n_bins; ++k) {
      const double freq = k * spec.bin_hz;
      double wgt = 0.0;
      if (freq > edges[f] && freq < edges[f + 2]) {
        wgt = freq <= edges[f + 1] ? (freq - edges[f]) / (edges[f + 1] - edges[f])
                                   : (edges[f + 2] - freq) / (edges[f + 2] - edges[f + 1]);
      }
      oracle[f] += wgt * power[k];
    }
  }
  std::vector<double> got(kNumMelFilters, 0.0);
  for (int f = 0; f < kNumMelFilters; ++f)
    for (int k = 0; k < spec.n_bins; ++k) got[f] += bank[f][k] * power[k];
  for (int f = 0; f < kNumMelFilters; ++f)
    CHECK_THAT(got[f], Catch::Matchers::WithinAbs(oracle[f], 1e-9 * (1.0 + oracle[f])));

  const int peak = static_cast<int>(std::max_element(got.begin(), got.end()) - got.begin());
  const int oracle_peak =
      static_cast<int>(std::max_element(oracle.begin(), oracle.end()) - oracle.begin());
  CHECK(peak == oracle_peak);
  // the winning filter straddles 1 kHz
  CHECK(edges[peak] < 1000.0);
  CHECK(edges[peak + 2] > 1000.0);
}

TEST_CASE("assembled vectors are deterministic with a curated tail") {
  auto samples = synth::sawtooth(170.0, 2.0, kSampleRateHz, 0.6);
  synth::add_in_place(samples, synth::white_noise(samples.size(), 13, 0.02));
  AudioClip clip = synth::make_clip(std::move(samples));

  const CuratedFeatures curated = compute_curated(clip);
  const LldMatrix lld = extract_lld(clip);
  const std::size_t keep = effective_keep(FeaturesConfig{}, lld);
  CHECK(keep == lld.functionals.size());  // default 3000 clamps to the vector

  const auto v1 = assemble_feature_vector(curated, lld, keep);
  const auto v2 = assemble_feature_vector(compute_curated(clip), extract_lld(clip), keep);
  REQUIRE(v1.size() == keep + 12);
  REQUIRE(v1.size() == v2.size());
  for (std::size_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == v2[i]);

  // full-keep prefix inverts back to the functional vector
  const std::vector<double> coeffs(v1.begin(), v1.begin() + keep);
  const auto back = idct_2(coeffs, lld.functionals.size());
  for (std::size_t i = 0; i < back.size(); ++i)
    CHECK_THAT(back[i], Catch::Matchers::WithinAbs(lld.functionals[i], 1e-9));
  const auto tail = curated.to_vector();
  for (std::size_t i = 0; i < tail.size(); ++i) CHECK(v1[keep + i] == tail[i]);

  CHECK_THROWS_MATCHES(assemble_feature_vector(curated, lld, lld.functionals.size() + 1),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::KeepTooLarge;
                       }));
}

TEST_CASE("curated features are stable under a one-hop shift") {
  auto samples = synth::sawtooth(160.0, 2.5, kSampleRateHz, 0.7);
  AudioClip clip = synth::make_clip(samples);
  std::vector<double> shifted(samples.begin() + kHop, samples.end());
  AudioClip moved = synth::make_clip(std::move(shifted));

  const auto a = compute_curated(clip).to_vector();
  const auto b = compute_curated(moved).to_vector();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-9});
    CHECK(std::abs(a[i] - b[i]) / denom < 0.05);
  }
}

TEST_CASE("curated extraction flags insufficient voicing instead of failing") {
  AudioClip clip = synth::make_clip(synth::white_noise(22050, 14, 0.3));
  const CuratedFeatures c = compute_curated(clip);
  CHECK(std::isfinite(c.jitter_abs_s));
  CHECK(std::isfinite(c.sharpness_acum));
}
