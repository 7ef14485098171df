#include "sepsync/comb_phase.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "sepsync/error.hpp"

namespace sepsync {
namespace {

constexpr double kMaxGapDeviation = 0.10;
constexpr double kStepLimit = 0.05;  // interval and integrator clamp, fraction of nominal
constexpr double kLockThresholdMs = 1.0;

// Index of the crossing nearest to t, or nullopt when the stream is empty.
std::optional<std::size_t> nearest(const std::vector<double>& sorted, double t) {
  if (sorted.empty()) return std::nullopt;
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  if (it == sorted.begin()) return 0;
  if (it == sorted.end()) return sorted.size() - 1;
  const auto hi = static_cast<std::size_t>(it - sorted.begin());
  return (*it - t) < (t - sorted[hi - 1]) ? hi : hi - 1;
}

}  // namespace

DiracComb make_comb(std::vector<double> impulses_ms) {
  if (impulses_ms.size() < 2) throw ConfigError("a comb needs at least two impulses");
  for (std::size_t k = 1; k < impulses_ms.size(); ++k) {
    if (!(impulses_ms[k] > impulses_ms[k - 1])) {
      throw ConfigError("comb impulses must be strictly increasing");
    }
  }
  DiracComb comb;
  comb.period_ms = (impulses_ms.back() - impulses_ms.front()) /
                   static_cast<double>(impulses_ms.size() - 1);
  for (std::size_t k = 1; k < impulses_ms.size(); ++k) {
    const double gap = impulses_ms[k] - impulses_ms[k - 1];
    if (std::abs(gap - comb.period_ms) > kMaxGapDeviation * comb.period_ms) {
      throw ConfigError("comb gap deviates more than 10% from the period");
    }
  }
  comb.impulses_ms = std::move(impulses_ms);
  return comb;
}

void validate(const PllConfig& c) {
  if (!(c.nominal_period_ms > 0.0)) throw ConfigError("nominal period must be positive");
  if (!(c.proportional_gain > 0.0) || !(c.integral_gain > 0.0)) {
    throw ConfigError("PLL gains must be positive");
  }
  if (!(c.skip_threshold_ms > 0.0) || !(c.skip_threshold_ms < 2.0 * c.nominal_period_ms)) {
    throw ConfigError("skip threshold must be in (0, 2 * nominal period)");
  }
  if (c.convergence_window < 1) throw ConfigError("convergence window must be at least 1");
  if (c.initial_period_ms &&
      std::abs(*c.initial_period_ms - c.nominal_period_ms) > kStepLimit * c.nominal_period_ms) {
    throw ConfigError("initial period too far from nominal");
  }
}

DiracComb run_pll(const ZcStream& zcs, const PllConfig& config) {
  validate(config);
  const auto& z = zcs.crossings_ms;
  if (z.size() < config.convergence_window || z.size() < 2) {
    std::ostringstream msg;
    msg << "PLL needs at least " << std::max<std::size_t>(config.convergence_window, 2)
        << " zero crossings, got " << z.size();
    throw LockError(msg.str());
  }

  const double nominal = config.nominal_period_ms;
  const double limit = kStepLimit * nominal;
  double integrator =
      std::clamp(config.initial_period_ms.value_or(nominal) - nominal, -limit, limit);
  double p = config.initial_phase_ms.value_or(z.front());
  const double end = z.back() + nominal / 2.0;

  std::vector<double> impulses;
  impulses.reserve(static_cast<std::size_t>((end - p) / nominal) + 2);
  impulses.push_back(p);

  std::size_t idx = 0;
  for (;;) {
    const double half = (nominal + integrator) / 2.0;
    while (idx < z.size() && z[idx] < p - half) ++idx;

    std::optional<std::size_t> best;
    for (std::size_t k = idx; k < z.size() && z[k] < p + half; ++k) {
      if (!best || std::abs(z[k] - p) < std::abs(z[*best] - p)) best = k;
    }

    double step = nominal + integrator;
    if (best && std::abs(z[*best] - p) <= config.skip_threshold_ms) {
      const double error = z[*best] - p;
      integrator = std::clamp(integrator + config.integral_gain * error, -limit, limit);
      step = nominal + integrator + config.proportional_gain * error;
      idx = *best + 1;
    }
    p += std::clamp(step, nominal - limit, nominal + limit);
    if (p > end) break;
    impulses.push_back(p);
  }
  return make_comb(std::move(impulses));
}

PllConvergence pll_convergence_time(const ZcStream& zcs, const PllConfig& config) {
  PllConvergence result;
  DiracComb comb;
  try {
    comb = run_pll(zcs, config);
  } catch (const LockError&) {
    return result;
  }
  const auto& z = zcs.crossings_ms;
  std::size_t run = 0;
  for (std::size_t k = 0; k < comb.impulses_ms.size(); ++k) {
    const double t = comb.impulses_ms[k];
    const auto n = nearest(z, t);
    run = (n && std::abs(z[*n] - t) < kLockThresholdMs) ? run + 1 : 0;
    if (run == config.convergence_window) {
      result.converged = true;
      result.impulse_index = k + 1 - run;
      result.seconds = (comb.impulses_ms[result.impulse_index] - z.front()) / 1000.0;
      return result;
    }
  }
  return result;
}

double phase_of(const DiracComb& comb, double t_ms) {
  const auto& imp = comb.impulses_ms;
  if (imp.empty() || t_ms < imp.front()) {
    throw CoverageError("timestamp precedes the first comb impulse");
  }
  const auto it = std::upper_bound(imp.begin(), imp.end(), t_ms);
  const double phi = t_ms - *(it - 1);
  if (phi >= 1.1 * comb.period_ms) {
    throw CoverageError("timestamp lies beyond the end of the comb");
  }
  return phi;
}

double displacement(const DiracComb& comb, double t_ms) {
  const auto n = nearest(comb.impulses_ms, t_ms);
  if (!n) throw CoverageError("empty comb");
  return t_ms - comb.impulses_ms[*n];
}

DiracComb build_comb(const SepTrace& buffer, double from_ms, double to_ms,
                     double safeguard_ms, const PipelineConfig& config) {
  const double lead = safeguard_ms + config.conditioning.settle_ms;
  const SepTrace segment = slice(buffer, from_ms - lead, to_ms + safeguard_ms);
  return run_pll(condition(segment, config.conditioning), config.pll);
}

void write_comb_csv(std::ostream& out, const DiracComb& comb) {
  out << "impulse_time_ms\n";
  for (double t : comb.impulses_ms) out << std::fixed << std::setprecision(6) << t << '\n';
}

}  // namespace sepsync
