#pragma once

// Software PLL turning a jittery zero-crossing stream into a Dirac comb,
// and phase extraction of timestamps against that comb.

#include <cstddef>
#include <optional>
#include <vector>

#include "sepsync/sep_signal.hpp"

namespace sepsync {

/// Impulse train produced by the PLL. `period_ms` is the mean impulse gap.
struct DiracComb {
  std::vector<double> impulses_ms;
  double period_ms = 0.0;
};

/// Builds a comb from impulse times, computing the period and checking that
/// impulses increase strictly and every gap is within 10% of the period.
DiracComb make_comb(std::vector<double> impulses_ms);

/// PI gains were tuned with tools/tune_pll (see README): clean input locks
/// immediately, +/-6 ms uniform jitter leaves about 1 ms of interval spread,
/// and the loop is critically damped (pole near 0.96 per impulse).
struct PllConfig {
  double nominal_period_ms = 20.0;
  double proportional_gain = 0.08;
  double integral_gain = 0.0017;
  double skip_threshold_ms = 25.0;
  std::size_t convergence_window = 10;
  /// Seeds for the first impulse and the running period. Defaults are the
  /// first zero crossing and the nominal period.
  std::optional<double> initial_phase_ms;
  std::optional<double> initial_period_ms;
};

void validate(const PllConfig& config);

/// Runs the PLL offline over a buffered stream. Each impulse is compared
/// with the nearest crossing inside half a period; offsets beyond
/// skip_threshold_ms or missing crossings leave the controller coasting on
/// its integrator. Throws LockError when fewer than convergence_window
/// crossings are supplied.
DiracComb run_pll(const ZcStream& zcs, const PllConfig& config = {});

struct PllConvergence {
  bool converged = false;
  double seconds = 0.0;           ///< from the first crossing to the start of lock
  std::size_t impulse_index = 0;  ///< first impulse of the locked run
};

/// Lock = |impulse - nearest crossing| < 1 ms for convergence_window
/// consecutive impulses. Non-convergence is reported, not thrown.
PllConvergence pll_convergence_time(const ZcStream& zcs, const PllConfig& config = {});

/// Elapsed time from the last impulse at or before t. Throws CoverageError if
/// t precedes the comb or lies more than 1.1 periods past its last impulse.
double phase_of(const DiracComb& comb, double t_ms);

/// Signed distance from t to the nearest impulse (t - impulse).
double displacement(const DiracComb& comb, double t_ms);

/// Signal-to-comb pipeline used by the protocol for one timestamp window.
struct PipelineConfig {
  ConditioningConfig conditioning{};
  PllConfig pll{};
};

/// Slices [from - settle - safeguard, to + safeguard] out of a node buffer,
/// conditions it and runs the PLL.
DiracComb build_comb(const SepTrace& buffer, double from_ms, double to_ms,
                     double safeguard_ms, const PipelineConfig& config = {});

void write_comb_csv(std::ostream& out, const DiracComb& comb);

}  // namespace sepsync
