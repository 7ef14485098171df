#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sepsync/error.hpp"
#include "sepsync/sep_signal.hpp"

using namespace sepsync;

namespace {

SepTrace sinusoid(double freq_hz, double seconds, double amplitude = 1.0, double offset = 0.0,
                  double rate = kDefaultSampleRateHz) {
  SepTrace t;
  t.sample_rate_hz = rate;
  t.centered = true;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t k = 0; k < n; ++k) {
    t.samples.push_back(offset + amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * k / rate));
  }
  return t;
}

SepTrace centered_from(std::vector<double> v, double rate = kDefaultSampleRateHz) {
  SepTrace t;
  t.sample_rate_hz = rate;
  t.centered = true;
  t.samples = std::move(v);
  return t;
}

}  // namespace

TEST(Synthesis, ZeroStrengthGivesConstantMidScale) {
  SepSynthesisConfig c;
  c.signal_strength = 0.0;
  const SepTrace t = synthesize_sep(c, 2.0);
  ASSERT_EQ(t.size(), 666u);
  for (double s : t.samples) EXPECT_EQ(s, 0.5);
}

TEST(Synthesis, SpectralPeakIsMainsFrequency) {
  SepSynthesisConfig c;
  c.signal_strength = 0.34;
  const SepTrace t = synthesize_sep(c, 2.0);
  EXPECT_NEAR(oracle::dft_peak_hz(t.samples, t.sample_rate_hz), 50.0, 0.5);

  c.mains_frequency_hz = 60.0;
  const SepTrace u = synthesize_sep(c, 2.0);
  EXPECT_NEAR(oracle::dft_peak_hz(u.samples, u.sample_rate_hz), 60.0, 0.5);
}

TEST(Synthesis, SameSeedIsBitIdentical) {
  SepSynthesisConfig c;
  c.noise_sigma = 0.01;
  c.amplitude_mod_depth = 0.3;
  c.dc_drift = 0.02;
  c.rng_seed = 42;
  EXPECT_EQ(synthesize_sep(c, 3.0).samples, synthesize_sep(c, 3.0).samples);
  SepSynthesisConfig d = c;
  d.rng_seed = 43;
  EXPECT_NE(synthesize_sep(c, 3.0).samples, synthesize_sep(d, 3.0).samples);
}

TEST(Synthesis, MeasuredStrengthMatchesConfigBeforeQuantization) {
  for (double strength : {0.05, 0.1, 0.34, 0.8}) {
    SepSynthesisConfig c;
    c.signal_strength = strength;
    c.amplitude_mod_depth = 0.3;
    c.rng_seed = 5;
    const SepTrace t = synthesize_analog(c, 20.0);
    EXPECT_NEAR(signal_strength(t), strength, 0.05 * strength) << "strength " << strength;
  }
}

TEST(Synthesis, SamplesStayInUnitRangeAndUniformlySpaced) {
  SepSynthesisConfig c;
  c.signal_strength = 1.0;
  c.noise_sigma = 0.2;
  c.dc_drift = 0.3;
  c.start_time_ms = 123.0;
  const SepTrace t = synthesize_sep(c, 2.0);
  EXPECT_NO_THROW(validate(t));
  for (double s : t.samples) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_DOUBLE_EQ(t.time_of(0), 123.0);
  EXPECT_NEAR(t.time_of(333), 123.0 + 1000.0, 1e-9);
}

TEST(Synthesis, RejectsInvalidConfig) {
  SepSynthesisConfig c;
  c.mains_frequency_hz = 55.0;
  EXPECT_THROW(synthesize_sep(c, 1.0), ConfigError);
  c = {};
  c.quantization_bits = 0;
  EXPECT_THROW(synthesize_sep(c, 1.0), ConfigError);
  c = {};
  c.signal_strength = 1.5;
  EXPECT_THROW(synthesize_sep(c, 1.0), ConfigError);
  c = {};
  c.sample_rate_hz = 90.0;
  EXPECT_THROW(synthesize_sep(c, 1.0), ConfigError);
  c = {};
  EXPECT_THROW(synthesize_sep(c, 0.0), ConfigError);
}

TEST(Synthesis, CarrierDelayShiftsTheWaveform) {
  SepSynthesisConfig a;
  a.signal_strength = 0.5;
  a.quantization_bits = 24;
  SepSynthesisConfig b = a;
  b.phase_offset_ms = 3.0;
  const ZcStream zb = condition(synthesize_sep(b, 4.0));
  const ZcStream zc = condition(synthesize_sep(a, 4.0));
  ASSERT_FALSE(zb.empty());
  ASSERT_EQ(zb.size(), zc.size());
  for (std::size_t k = 0; k < zb.size(); ++k) {
    EXPECT_NEAR(zb.crossings_ms[k] - zc.crossings_ms[k], 3.0, 0.05);
  }
}

TEST(Quantize, MidTreadLevelsAndClamp) {
  SepTrace t;
  t.samples = {0.0, 0.2, 0.5, 0.999, 1.0, 0.0004, 0.0006};
  const SepTrace q = quantize(t, 10);
  const double lsb = 1.0 / 1024.0;
  for (double s : q.samples) {
    EXPECT_DOUBLE_EQ(std::round(s / lsb) * lsb, s);
    EXPECT_LE(s, 1023.0 * lsb);
  }
  EXPECT_EQ(q.samples[0], 0.0);
  EXPECT_EQ(q.samples[2], 0.5);
  EXPECT_EQ(q.samples[4], 1023.0 * lsb);
  EXPECT_EQ(q.samples[5], 0.0);
  EXPECT_EQ(q.samples[6], lsb);
  EXPECT_THROW(quantize(t, 0), ConfigError);
}

TEST(Bandpass, MatchesTransferFunctionOracle) {
  for (double f : {30.0, 45.0, 48.0, 50.0, 52.0, 55.0, 70.0, 150.0}) {
    const SepTrace in = sinusoid(f, 6.0);
    const SepTrace out = bandpass_filter(in);
    const std::size_t settle = 3 * 333;
    const double measured =
        20.0 * std::log10(oracle::rms(out.samples, settle) / oracle::rms(in.samples, settle));
    EXPECT_NEAR(measured, oracle::bpf_response_db(f), 0.05) << f << " Hz";
  }
  EXPECT_GT(oracle::bpf_response_db(50.0), -3.0);
  EXPECT_LT(oracle::bpf_response_db(0.0), -40.0);
  EXPECT_LT(oracle::bpf_response_db(150.0), -20.0);
  EXPECT_NEAR(oracle::bpf_response_db(45.0), -3.0103, 0.01);
  EXPECT_NEAR(oracle::bpf_response_db(55.0), -3.0103, 0.01);
}

TEST(Bandpass, DcInputIsRemovedAfterSettling) {
  SepTrace in;
  in.samples.assign(3 * 333, 0.7);
  const SepTrace out = bandpass_filter(in);
  EXPECT_TRUE(out.centered);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t k = 333; k < out.size(); ++k) EXPECT_LT(std::abs(out.samples[k]), 0.007);
}

TEST(Bandpass, FiftyHertzPassesAndHarmonicIsAttenuated) {
  const SepTrace in50 = sinusoid(50.0, 4.0, 0.3);
  const double g50 = oracle::rms(bandpass_filter(in50).samples, 333) / oracle::rms(in50.samples, 333);
  EXPECT_GT(20.0 * std::log10(g50), -3.0);
  const SepTrace in150 = sinusoid(150.0, 4.0, 0.3);
  const double g150 =
      oracle::rms(bandpass_filter(in150).samples, 333) / oracle::rms(in150.samples, 333);
  EXPECT_LT(20.0 * std::log10(g150), -20.0);
}

TEST(Bandpass, IsLinear) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> x(1000);
  for (double& v : x) v = g(rng);
  const SepTrace a = bandpass_filter(centered_from(x));
  for (double& v : x) v *= 3.7;
  const SepTrace b = bandpass_filter(centered_from(x));
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_NEAR(b.samples[k], 3.7 * a.samples[k], 1e-9 * std::max(1.0, std::abs(b.samples[k])));
  }
}

TEST(Bandpass, RejectsOtherSampleRates) {
  EXPECT_THROW(bandpass_filter(sinusoid(50.0, 1.0, 1.0, 0.0, 500.0)), ConfigError);
}

TEST(MeanRemoval, ConstantInputGivesZeros) {
  SepTrace in;
  in.samples.assign(50, 0.42);
  const SepTrace out = mean_removal_filter(in, 7);
  for (std::size_t k = 6; k < out.size(); ++k) EXPECT_NEAR(out.samples[k], 0.0, 1e-15);
}

TEST(MeanRemoval, WindowOneIsIdenticallyZero) {
  const SepTrace out = mean_removal_filter(sinusoid(50.0, 1.0), 1);
  for (double s : out.samples) EXPECT_EQ(s, 0.0);
}

TEST(MeanRemoval, RemovesDcFromMainsSinusoid) {
  const SepTrace in = sinusoid(50.0, 3.0, 0.3, 0.2);
  const SepTrace out = mean_removal_filter(in, 7);
  ASSERT_EQ(out.size(), in.size());
  // 100 whole cycles span 2000 ms = 666 samples at 333 Hz; skip one window.
  double sum = 0.0;
  for (std::size_t k = 7; k < 7 + 666; ++k) sum += out.samples[k];
  EXPECT_LT(std::abs(sum / 666.0), 1e-3);
}

TEST(MeanRemoval, RejectsZeroWindow) {
  EXPECT_THROW(mean_removal_filter(sinusoid(50.0, 1.0), 0), ConfigError);
}

TEST(ZeroCrossing, SymmetricPairCrossesAtMidpoint) {
  SepTrace t = centered_from({-1.0, 1.0}, 1000.0 / 3.0);
  const ZcStream z = detect_zero_crossings(t);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_NEAR(z.crossings_ms[0], 1.5, 1e-9);
}

TEST(ZeroCrossing, OnlyRisingCrossingsAreReported) {
  EXPECT_TRUE(detect_zero_crossings(centered_from({0.5, 0.2, 0.9, 0.1})).empty());
  EXPECT_TRUE(detect_zero_crossings(centered_from({1.0, -1.0, -2.0})).empty());
  EXPECT_EQ(detect_zero_crossings(centered_from({1.0, -1.0, 1.0, -1.0, 1.0})).size(), 2u);
  EXPECT_TRUE(detect_zero_crossings(SepTrace{}).empty());
}

TEST(ZeroCrossing, CleanSinusoidSpacingAndCount) {
  // Phase offset keeps samples off exact zeros.
  SepTrace t;
  t.centered = true;
  const int cycles = 200;
  const auto n = static_cast<std::size_t>(cycles * 20.0 / (1000.0 / 333.0));
  for (std::size_t k = 0; k < n; ++k) {
    t.samples.push_back(std::sin(2.0 * std::numbers::pi * 50.0 * k / 333.0 + 0.3));
  }
  const ZcStream z = detect_zero_crossings(t);
  EXPECT_NEAR(static_cast<double>(z.size()), cycles, 1.0);
  for (std::size_t k = 1; k < z.size(); ++k) {
    EXPECT_NEAR(z.crossings_ms[k] - z.crossings_ms[k - 1], 20.0, 0.2);
  }
}

TEST(ZeroCrossing, StrictlyIncreasingOnNoisySignal) {
  SepSynthesisConfig c;
  c.signal_strength = 0.05;
  c.noise_sigma = 0.02;
  const ZcStream z = detect_zero_crossings(mean_removal_filter(synthesize_sep(c, 5.0), 7));
  for (std::size_t k = 1; k < z.size(); ++k) EXPECT_GT(z.crossings_ms[k], z.crossings_ms[k - 1]);
}

TEST(Condition, DeterministicAndSettled) {
  SepSynthesisConfig c;
  c.amplitude_mod_depth = 0.3;
  c.noise_sigma = 0.005;
  c.start_time_ms = 500.0;
  const SepTrace raw = synthesize_sep(c, 5.0);
  const ZcStream a = condition(raw);
  const ZcStream b = condition(raw);
  EXPECT_EQ(a.crossings_ms, b.crossings_ms);
  ASSERT_FALSE(a.empty());
  EXPECT_GE(a.crossings_ms.front(), 1500.0);
  EXPECT_NEAR(static_cast<double>(a.size()), 200.0, 2.0);
}

TEST(Slice, CoverageIsEnforced) {
  SepSynthesisConfig c;
  c.start_time_ms = 1000.0;
  const SepTrace t = synthesize_sep(c, 2.0);
  const SepTrace s = slice(t, 1500.0, 2000.0);
  EXPECT_GE(s.start_time_ms, 1500.0);
  EXPECT_LE(s.end_time_ms(), 2000.0);
  EXPECT_NEAR(static_cast<double>(s.size()), 500.0 / (1000.0 / 333.0), 1.0);
  EXPECT_THROW(slice(t, 900.0, 1500.0), CoverageError);
  EXPECT_THROW(slice(t, 1500.0, 3100.0), CoverageError);
}

TEST(DiscardLeading, DropsSettleWindow) {
  const SepTrace t = sinusoid(50.0, 3.0);
  const SepTrace d = discard_leading(t, 1000.0);
  EXPECT_GE(d.start_time_ms, 1000.0 - 1e-6);
  EXPECT_LT(d.start_time_ms, 1000.0 + t.sample_period_ms());
  EXPECT_EQ(d.size() + 333, t.size());
}

TEST(TraceCsv, RoundTrip) {
  SepSynthesisConfig c;
  c.start_time_ms = 12.5;
  const SepTrace t = synthesize_sep(c, 1.0);
  std::stringstream io;
  write_trace_csv(io, t);
  const SepTrace r = read_trace_csv(io);
  ASSERT_EQ(r.size(), t.size());
  EXPECT_NEAR(r.sample_rate_hz, 333.0, 1e-3);
  EXPECT_NEAR(r.start_time_ms, 12.5, 1e-6);
  EXPECT_FALSE(r.centered);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(r.samples[k], t.samples[k], 1e-9);
}

TEST(TraceCsv, MalformedInputIsRejected) {
  std::stringstream bad_header("t,amp\n0,0.5\n");
  EXPECT_THROW(read_trace_csv(bad_header), FormatError);
  std::stringstream bad_value("time_ms,amplitude\n0,abc\n3,0.5\n");
  EXPECT_THROW(read_trace_csv(bad_value), FormatError);
  std::stringstream uneven("time_ms,amplitude\n0,0.5\n3,0.5\n9,0.5\n");
  EXPECT_THROW(read_trace_csv(uneven), FormatError);
}

TEST(ZcCsv, RoundTrip) {
  ZcStream z;
  z.crossings_ms = {1.25, 21.5, 41.125};
  std::stringstream io;
  write_zc_csv(io, z);
  const ZcStream r = read_zc_csv(io);
  ASSERT_EQ(r.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.crossings_ms[k], z.crossings_ms[k], 1e-9);
}

TEST(ScalingRobustness, SixtyfoldScaleDownKeepsCrossings) {
  SepSynthesisConfig c;
  c.signal_strength = 0.34;
  c.noise_sigma = 0.002;
  c.amplitude_mod_depth = 0.2;
  const SepTrace base = synthesize_sep(c, 10.0);
  double mean = 0.0;
  for (double x : base.samples) mean += x;
  mean /= static_cast<double>(base.size());
  const double mid = std::round(mean * 1024.0) / 1024.0;
  SepTrace scaled = base;
  for (double& x : scaled.samples) x = mid + (x - mid) / 60.0;
  scaled = quantize(scaled, 10);
  EXPECT_NEAR(signal_strength(scaled), 0.34 / 60.0, 0.002);

  const ZcStream zb = condition(base);
  const ZcStream zs = condition(scaled);
  ASSERT_FALSE(zs.empty());
  double total = 0.0;
  for (double b : zb.crossings_ms) {
    double best = 1e9;
    for (double s : zs.crossings_ms) best = std::min(best, std::abs(s - b));
    total += best;
  }
  EXPECT_LE(total / static_cast<double>(zb.size()), 0.5);
}
