#include "sepsync/sep_signal.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "csv_util.hpp"
#include "sepsync/bpf_coefficients.hpp"
#include "sepsync/error.hpp"
#include "sepsync/rng.hpp"

namespace sepsync {
namespace {

constexpr double kTimeSlackMs = 1e-6;
constexpr double kEnvelopeCorrelationS = 1.0;
constexpr double kDcReversionS = 10.0;

enum Stream : std::uint64_t { kEnvelope = 1, kDc = 2, kNoise = 3 };

}  // namespace

void validate(const SepTrace& trace) {
  if (!(trace.sample_rate_hz > 0.0) || !std::isfinite(trace.sample_rate_hz)) {
    throw ConfigError("trace sample rate must be positive");
  }
  if (!std::isfinite(trace.start_time_ms)) throw ConfigError("trace start time must be finite");
  for (double s : trace.samples) {
    if (!std::isfinite(s)) throw ConfigError("trace contains a non-finite sample");
    if (!trace.centered && (s < 0.0 || s > 1.0)) {
      throw ConfigError("raw trace sample outside [0, 1]");
    }
  }
}

void validate(const SepSynthesisConfig& c) {
  if (c.mains_frequency_hz != 50.0 && c.mains_frequency_hz != 60.0) {
    throw ConfigError("mains frequency must be 50 or 60 Hz");
  }
  if (!(c.sample_rate_hz > 2.0 * c.mains_frequency_hz)) {
    throw ConfigError("sample rate must exceed twice the mains frequency");
  }
  if (!(c.signal_strength >= 0.0 && c.signal_strength <= 1.0)) {
    throw ConfigError("signal strength must be in [0, 1]");
  }
  if (c.quantization_bits < 1 || c.quantization_bits > 24) {
    throw ConfigError("quantization bits must be in [1, 24]");
  }
  if (!(c.dc_drift >= 0.0) || !(c.amplitude_mod_depth >= 0.0) || !(c.noise_sigma >= 0.0)) {
    throw ConfigError("drift, modulation depth and noise must be non-negative");
  }
  if (!(c.phase_wander_period_s > 0.0)) throw ConfigError("wander period must be positive");
  if (!std::isfinite(c.phase_offset_ms) || !std::isfinite(c.phase_wander_amplitude_ms)) {
    throw ConfigError("phase offset must be finite");
  }
  validate(c.clock);
}

double carrier_delay_ms(const SepSynthesisConfig& c, double reference_ms) {
  double delay = c.phase_offset_ms;
  if (c.phase_wander_amplitude_ms != 0.0) {
    delay += c.phase_wander_amplitude_ms *
             std::sin(2.0 * std::numbers::pi * reference_ms / (c.phase_wander_period_s * 1000.0));
  }
  return delay;
}

SepTrace synthesize_analog(const SepSynthesisConfig& c, double duration_s) {
  validate(c);
  if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");

  const auto n = static_cast<std::size_t>(std::llround(duration_s * c.sample_rate_hz));
  const double dt_s = 1.0 / c.sample_rate_hz;

  Rng env_rng(derive_seed(c.rng_seed, 0, kEnvelope));
  Rng dc_rng(derive_seed(c.rng_seed, 0, kDc));
  Rng noise_rng(derive_seed(c.rng_seed, 0, kNoise));
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Log-envelope: stationary OU process, unit variance.
  std::vector<double> envelope(n, 1.0);
  if (c.amplitude_mod_depth > 0.0) {
    const double a = std::exp(-dt_s / kEnvelopeCorrelationS);
    const double b = std::sqrt(1.0 - a * a);
    double w = gauss(env_rng);
    for (std::size_t k = 0; k < n; ++k) {
      envelope[k] = std::exp(c.amplitude_mod_depth * w);
      w = a * w + b * gauss(env_rng);
    }
    double ms = 0.0;
    for (double e : envelope) ms += e * e;
    const double rms = std::sqrt(ms / static_cast<double>(n));
    for (double& e : envelope) e /= rms;
  }

  const double amplitude = c.signal_strength * 0.5;
  const double omega = 2.0 * std::numbers::pi * c.mains_frequency_hz / 1000.0;  // rad per ms
  const double dc_decay = std::exp(-dt_s / kDcReversionS);
  const double dc_step = c.dc_drift * std::sqrt(dt_s);

  SepTrace trace;
  trace.start_time_ms = c.start_time_ms;
  trace.sample_rate_hz = c.sample_rate_hz;
  trace.samples.resize(n);
  double dc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double local = trace.time_of(k);
    const double ref = c.clock.reference_of(local);
    const double carrier =
        std::sin(omega * (ref - carrier_delay_ms(c, ref)) + c.carrier_phase_rad);
    double x = 0.5 + dc + amplitude * envelope[k] * carrier;
    if (c.noise_sigma > 0.0) x += c.noise_sigma * gauss(noise_rng);
    trace.samples[k] = std::clamp(x, 0.0, 1.0);
    if (c.dc_drift > 0.0) dc = dc * dc_decay + dc_step * gauss(dc_rng);
  }
  return trace;
}

SepTrace quantize(const SepTrace& trace, int bits) {
  if (bits < 1 || bits > 24) throw ConfigError("quantization bits must be in [1, 24]");
  if (trace.centered) throw ConfigError("only raw [0, 1] traces can be quantized");
  const double levels = std::ldexp(1.0, bits);
  const double top = (levels - 1.0) / levels;
  SepTrace out = trace;
  for (double& s : out.samples) {
    s = std::clamp(std::round(std::clamp(s, 0.0, 1.0) * levels) / levels, 0.0, top);
  }
  return out;
}

SepTrace synthesize_sep(const SepSynthesisConfig& config, double duration_s) {
  return quantize(synthesize_analog(config, duration_s), config.quantization_bits);
}

double signal_strength(const SepTrace& trace) {
  if (trace.size() < 2) return 0.0;
  double mean = 0.0;
  for (double s : trace.samples) mean += s;
  mean /= static_cast<double>(trace.size());
  double var = 0.0;
  for (double s : trace.samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(trace.size());
  return std::sqrt(var) / kFullScaleSigma;
}

SepTrace bandpass_filter(const SepTrace& trace) {
  if (trace.empty()) throw ConfigError("cannot filter an empty trace");
  if (std::abs(trace.sample_rate_hz - bpf::kDesignSampleRateHz) > 1e-6) {
    std::ostringstream msg;
    msg << "band-pass coefficients are designed for " << bpf::kDesignSampleRateHz
        << " Hz, trace is sampled at " << trace.sample_rate_hz << " Hz";
    throw ConfigError(msg.str());
  }
  SepTrace out = trace;
  out.centered = true;
  for (const auto& sec : bpf::kSections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& s : out.samples) {
      const double x = s;
      const double y = sec.b0 * x + z1;
      z1 = sec.b1 * x - sec.a1 * y + z2;
      z2 = sec.b2 * x - sec.a2 * y;
      s = y;
    }
  }
  return out;
}

SepTrace mean_removal_filter(const SepTrace& trace, std::size_t window) {
  if (window < 1 || window > trace.size()) {
    throw ConfigError("mean-removal window must be in [1, trace length]");
  }
  SepTrace out = trace;
  out.centered = true;
  // Windows are short, so the mean is summed afresh each step; a running
  // sum would accumulate rounding over long traces.
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const std::size_t first = k + 1 >= window ? k + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t m = first; m <= k; ++m) sum += trace.samples[m];
    out.samples[k] = trace.samples[k] - sum / static_cast<double>(k + 1 - first);
  }
  return out;
}

SepTrace discard_leading(const SepTrace& trace, double ms) {
  if (ms <= 0.0) return trace;
  const auto skip = static_cast<std::size_t>(
      std::max(0.0, std::ceil(ms / trace.sample_period_ms() - 1e-9)));
  SepTrace out;
  out.sample_rate_hz = trace.sample_rate_hz;
  out.centered = trace.centered;
  if (skip >= trace.size()) {
    out.start_time_ms = trace.start_time_ms + ms;
    return out;
  }
  out.start_time_ms = trace.time_of(skip);
  out.samples.assign(trace.samples.begin() + static_cast<std::ptrdiff_t>(skip),
                     trace.samples.end());
  return out;
}

SepTrace slice(const SepTrace& trace, double from_ms, double to_ms) {
  if (to_ms < from_ms) throw ConfigError("slice interval is reversed");
  if (trace.empty() || from_ms < trace.start_time_ms - kTimeSlackMs ||
      to_ms > trace.end_time_ms() + kTimeSlackMs) {
    std::ostringstream msg;
    msg << std::fixed << std::setprecision(3) << "buffer [" << trace.start_time_ms << ", "
        << trace.end_time_ms() << "] ms does not cover [" << from_ms << ", " << to_ms << "] ms";
    throw CoverageError(msg.str());
  }
  const double period = trace.sample_period_ms();
  const auto first = static_cast<std::size_t>(
      std::max(0.0, std::ceil((from_ms - trace.start_time_ms) / period - 1e-9)));
  const auto last = std::min(
      trace.size() - 1,
      static_cast<std::size_t>(std::floor((to_ms - trace.start_time_ms) / period + 1e-9)));
  SepTrace out;
  out.sample_rate_hz = trace.sample_rate_hz;
  out.centered = trace.centered;
  out.start_time_ms = trace.time_of(first);
  if (first <= last) {
    out.samples.assign(trace.samples.begin() + static_cast<std::ptrdiff_t>(first),
                       trace.samples.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  }
  return out;
}

ZcStream detect_zero_crossings(const SepTrace& trace) {
  ZcStream zcs;
  const double period = trace.sample_period_ms();
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double prev = trace.samples[k - 1];
    const double cur = trace.samples[k];
    if (prev < 0.0 && cur >= 0.0) {
      const double frac = -prev / (cur - prev);
      zcs.crossings_ms.push_back(trace.time_of(k - 1) + frac * period);
    }
  }
  return zcs;
}

ZcStream condition(const SepTrace& raw, const ConditioningConfig& config) {
  SepTrace filtered = config.filter == FilterKind::bandpass
                          ? bandpass_filter(raw)
                          : mean_removal_filter(raw, config.mean_removal_window);
  return detect_zero_crossings(discard_leading(filtered, config.settle_ms));
}

void write_trace_csv(std::ostream& out, const SepTrace& trace) {
  out << "time_ms,amplitude\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << std::fixed << std::setprecision(6) << trace.time_of(k) << ','
        << std::setprecision(9) << trace.samples[k] << '\n';
  }
}

SepTrace read_trace_csv(std::istream& in) {
  const auto rows = csv::read_numeric(in, {"time_ms", "amplitude"});
  SepTrace trace;
  if (rows.empty()) return trace;
  trace.start_time_ms = rows.front()[0];
  if (rows.size() >= 2) {
    const double span = rows.back()[0] - rows.front()[0];
    if (!(span > 0.0)) throw FormatError("trace timestamps must increase");
    const double rate = 1000.0 * static_cast<double>(rows.size() - 1) / span;
    trace.sample_rate_hz = std::round(rate * 1000.0) / 1000.0;
  }
  trace.samples.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (std::abs(rows[k][0] - trace.time_of(k)) > 1e-3) {
      throw FormatError("trace samples are not uniformly spaced (row " + std::to_string(k + 2) +
                        ")");
    }
    trace.samples.push_back(rows[k][1]);
    if (rows[k][1] < 0.0 || rows[k][1] > 1.0) trace.centered = true;
  }
  return trace;
}

void write_zc_csv(std::ostream& out, const ZcStream& zcs) {
  out << "zc_time_ms\n";
  for (double t : zcs.crossings_ms) out << std::fixed << std::setprecision(6) << t << '\n';
}

ZcStream read_zc_csv(std::istream& in) {
  ZcStream zcs;
  for (const auto& row : csv::read_numeric(in, {"zc_time_ms"})) {
    if (!zcs.empty() && row[0] <= zcs.crossings_ms.back()) {
      throw FormatError("zero crossings must be strictly increasing");
    }
    zcs.crossings_ms.push_back(row[0]);
  }
  return zcs;
}

}  // namespace sepsync
