#pragma once

// Skin-electric-potential traces: synthesis, conditioning filters and
// zero-crossing detection.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sepsync/clock.hpp"

namespace sepsync {

inline constexpr double kDefaultSampleRateHz = 333.0;

/// Standard deviation of a full-scale (peak-to-peak 1) sinusoid, 0.5 / sqrt(2).
inline constexpr double kFullScaleSigma = 0.35355339059327373;

/// Uniformly sampled signal segment on the owning node's clock.
///
/// Raw traces hold ADC fractions in [0, 1]. Conditioned traces (after a
/// band-pass or mean-removal filter) are signed and have `centered` set.
struct SepTrace {
  double start_time_ms = 0.0;
  double sample_rate_hz = kDefaultSampleRateHz;
  bool centered = false;
  std::vector<double> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double sample_period_ms() const { return 1000.0 / sample_rate_hz; }
  double time_of(std::size_t k) const {
    return start_time_ms + static_cast<double>(k) * sample_period_ms();
  }
  double end_time_ms() const { return empty() ? start_time_ms : time_of(size() - 1); }
};

/// Throws ConfigError when the trace breaks its invariants.
void validate(const SepTrace& trace);

/// Parameters of the synthetic SEP model.
///
/// The carrier is a mains sinusoid evaluated on reference time, so nodes
/// with different clocks sample one physical waveform. `phase_offset_ms`
/// (plus an optional slow sinusoidal wander) delays the waveform seen by
/// this node, which is how comb displacement between nodes is modeled.
///
/// The envelope follows an Ornstein-Uhlenbeck random walk in log amplitude
/// (correlation time about one second) and is renormalized to unit RMS, so
/// `signal_strength` is the measured strength of the noise-free carrier.
/// This body-movement model is a stand-in, not a measured statistic.
struct SepSynthesisConfig {
  double mains_frequency_hz = 50.0;
  double sample_rate_hz = kDefaultSampleRateHz;
  double signal_strength = 0.34;
  double dc_drift = 0.0;             ///< baseline wander, ADC fraction per sqrt(second)
  double amplitude_mod_depth = 0.0;  ///< std of the log-envelope walk
  double noise_sigma = 0.0;
  double phase_offset_ms = 0.0;
  double phase_wander_amplitude_ms = 0.0;
  double phase_wander_period_s = 3600.0;
  double carrier_phase_rad = 0.0;
  int quantization_bits = 10;
  std::uint64_t rng_seed = 1;
  double start_time_ms = 0.0;  ///< local time of the first sample
  NodeClock clock{};
};

void validate(const SepSynthesisConfig& config);

/// Delay (ms) of the waveform seen by a node at a reference instant.
double carrier_delay_ms(const SepSynthesisConfig& config, double reference_ms);

/// Unquantized synthetic trace, clamped to [0, 1].
SepTrace synthesize_analog(const SepSynthesisConfig& config, double duration_s);

/// Mid-tread uniform quantizer with 2^bits levels spaced 2^-bits apart over [0, 1).
SepTrace quantize(const SepTrace& trace, int bits);

/// synthesize_analog followed by quantize(config.quantization_bits).
SepTrace synthesize_sep(const SepSynthesisConfig& config, double duration_s);

/// Sample standard deviation over the full-scale sinusoid sigma.
double signal_strength(const SepTrace& trace);

/// 6th-order Butterworth band-pass (45-55 Hz) as three cascaded biquads.
/// Only valid for traces sampled at the coefficients' design rate.
SepTrace bandpass_filter(const SepTrace& trace);

/// output[k] = input[k] - mean(input[k - window + 1 .. k]); the first
/// window - 1 outputs average over the samples available so far.
SepTrace mean_removal_filter(const SepTrace& trace, std::size_t window);

/// Drops the samples earlier than start_time_ms + ms.
SepTrace discard_leading(const SepTrace& trace, double ms);

/// Samples whose timestamps fall in [from_ms, to_ms]. Throws CoverageError
/// unless the trace spans the whole interval.
SepTrace slice(const SepTrace& trace, double from_ms, double to_ms);

/// Strictly increasing negative-to-positive crossing instants (ms).
struct ZcStream {
  std::vector<double> crossings_ms;
  std::string source;

  std::size_t size() const { return crossings_ms.size(); }
  bool empty() const { return crossings_ms.empty(); }
};

/// One crossing per negative-to-positive sign change, placed at the linear
/// interpolation between the negative sample and the following one.
ZcStream detect_zero_crossings(const SepTrace& trace);

enum class FilterKind { bandpass, mean_removal };

struct ConditioningConfig {
  FilterKind filter = FilterKind::bandpass;
  std::size_t mean_removal_window = 7;  ///< about one 50 Hz cycle at 333 Hz
  double settle_ms = 1000.0;            ///< filtered output discarded before ZC detection
};

/// filter -> discard settle_ms -> detect_zero_crossings.
ZcStream condition(const SepTrace& raw, const ConditioningConfig& config = {});

// CSV: header `time_ms,amplitude` for traces, `zc_time_ms` for crossings.
void write_trace_csv(std::ostream& out, const SepTrace& trace);
SepTrace read_trace_csv(std::istream& in);
void write_zc_csv(std::ostream& out, const ZcStream& zcs);
ZcStream read_zc_csv(std::istream& in);

}  // namespace sepsync
