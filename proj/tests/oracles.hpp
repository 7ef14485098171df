#pragma once

// Reference computations used as test oracles. They share no code with the
// library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sepsync/bpf_coefficients.hpp"

namespace oracle {

/// |X(f)| of a real sequence by direct summation.
inline double dft_magnitude(const std::vector<double>& x, double freq_hz, double rate_hz) {
  std::complex<double> acc = 0.0;
  const double w = -2.0 * std::numbers::pi * freq_hz / rate_hz;
  for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * std::polar(1.0, w * n);
  return std::abs(acc);
}

/// Frequency of the largest DFT bin (excluding DC) on an integer-bin grid.
inline double dft_peak_hz(const std::vector<double>& x, double rate_hz) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> centered(x);
  for (double& v : centered) v -= mean;
  const double bin = rate_hz / static_cast<double>(x.size());
  double best_f = 0.0, best = -1.0;
  for (std::size_t k = 1; k < x.size() / 2; ++k) {
    const double m = dft_magnitude(centered, k * bin, rate_hz);
    if (m > best) {
      best = m;
      best_f = k * bin;
    }
  }
  return best_f;
}

/// Gain in dB of the cascaded biquads at freq_hz, from the transfer function.
inline double bpf_response_db(double freq_hz) {
  using C = std::complex<double>;
  const C z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sepsync::bpf::kDesignSampleRateHz);
  const C z2 = z1 * z1;
  C h = 1.0;
  for (const auto& s : sepsync::bpf::kSections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return 20.0 * std::log10(std::max(std::abs(h), 1e-300));
}

inline double rms(const std::vector<double>& x, std::size_t from) {
  double s = 0.0;
  for (std::size_t k = from; k < x.size(); ++k) s += x[k] * x[k];
  return std::sqrt(s / static_cast<double>(x.size() - from));
}

/// Folds a one-way delay into (integer periods, rounded phase difference)
/// given the displacement eps: tau = theta + i T - eps for the request.
struct Fold {
  int periods;
  double theta;
};
inline Fold fold(double tau_plus, double period) {
  const double i = std::floor(tau_plus / period);
  return {static_cast<int>(i), tau_plus - i * period};
}

}  // namespace oracle
