#pragma once

// Experiment runners composing signal synthesis, sessions and the solver.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sepsync/ias.hpp"
#include "sepsync/link_model.hpp"
#include "sepsync/sep_signal.hpp"
#include "sepsync/sync_protocol.hpp"

namespace sepsync {

enum class Scenario { e2e_sync, ntp_baseline, convergence_study, pipeline_bench, strength_sweep };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);

/// Comb displacement of the slave relative to the master. Per trial a
/// constant is drawn uniformly from [-max_abs_ms, max_abs_ms] (or fixed to
/// constant_ms when max_abs_ms is 0), plus an optional slow sinusoidal wander.
struct EpsilonModel {
  double constant_ms = 0.0;
  double max_abs_ms = 0.0;
  double wander_amplitude_ms = 0.0;
  double wander_period_s = 3600.0;

  double bound() const;  ///< largest |epsilon| the model can produce
};

struct ExperimentConfig {
  Scenario scenario = Scenario::e2e_sync;
  LinkModel link = constant_preset(10.0, 10.0);
  SepSynthesisConfig slave_sep{};
  SepSynthesisConfig master_sep{};
  EpsilonModel epsilon{};
  SolverConfig solver{};
  SessionOptions session{};
  double drift_ppm_max = 0.0;      ///< per-node drift drawn from [-max, max]
  double offset_range_ms = 1000.0; ///< per-node clock offsets drawn from [-range, range]
  double session_gap_ms = 10.0;    ///< idle time between sessions
  int sessions_per_trial = 0;      ///< ntp_baseline: sessions per trial (0 = until solved)
  int trials = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string output_path;
};

void validate(const ExperimentConfig& config);

/// BLE link, skin-contact SEP strengths on a 10-bit ADC with body movement
/// and DC wander, epsilon up to 2 ms.
ExperimentConfig default_experiment();

struct E2eTrial {
  int trial = 0;
  SolveStatus status = SolveStatus::max_sessions_reached;
  int k = 0;
  int total_sessions = 0;
  int drops = 0;
  int restarts = 0;
  double epsilon_ms = 0.0;
  double delta_gt_ms = 0.0;
  double delta_ms = 0.0;
  double delta_error_ms = 0.0;

  bool converged() const { return status == SolveStatus::converged; }
};

struct E2eSession {
  int trial = 0;
  SessionRecord record;
  SessionTruth truth;
  double ntp_error_ms = 0.0;
};

struct E2eSummary {
  int trials = 0;
  int converged = 0;
  double max_abs_error_ms = 0.0;  ///< over converged trials
  Summary error;                  ///< delta error over converged trials
  Summary k;
  int sessions = 0;
  Summary ntp_abs_error;
  double ntp_fraction_over_25ms = 0.0;
  double ntp_max_abs_error_ms = 0.0;
};

struct E2eReport {
  std::vector<E2eTrial> trials;
  std::vector<E2eSession> sessions;
  E2eSummary summary;
};

/// For every trial: per-node SEP buffers with a drawn epsilon, then sessions
/// through the link until the solver settles. With sessions_per_trial > 0
/// (ntp_baseline) exactly that many sessions are logged per trial for the
/// NTP comparison; the solver still consumes the same stream.
E2eReport run_e2e(const ExperimentConfig& config);

void write_e2e_trials_csv(std::ostream& out, const E2eReport& report);
void write_e2e_sessions_csv(std::ostream& out, const E2eReport& report);
std::string e2e_summary_json(const E2eReport& report);

struct SweepConfig {
  SepSynthesisConfig baseline{};
  double duration_s = 10.0;
  std::vector<double> ratios{1, 2, 5, 10, 20, 30, 40, 60, 100, 200, 1000};
  ConditioningConfig conditioning{};
};

SweepConfig default_sweep();

struct SweepRow {
  double ratio = 1.0;
  double strength = 0.0;  ///< measured after scaling and re-quantization
  std::size_t zc_count = 0;
  bool detected = false;  ///< false: flat trace or no usable crossings
  double mae_ms = 0.0;
};

struct SweepReport {
  double baseline_strength = 0.0;
  std::size_t baseline_zc_count = 0;
  std::vector<SweepRow> rows;
};

/// Scales a quantized baseline trace around its mid level by 1/ratio,
/// re-quantizes it and compares its crossings to the baseline's (mean
/// absolute error of nearest-neighbour matches).
SweepReport run_strength_sweep(const SweepConfig& config);

/// Mean over baseline crossings of |baseline - nearest other crossing|;
/// nullopt when `other` is empty.
std::optional<double> zc_mae(const std::vector<double>& baseline,
                             const std::vector<double>& other);

void write_sweep_csv(std::ostream& out, const SweepReport& report);

struct BenchRow {
  std::string metric;
  double value = 0.0;
};

/// Pipeline behaviors on synthetic streams: BPF gains, PLL jitter spread,
/// outage drift and recovery, convergence time.
std::vector<BenchRow> run_pipeline_bench(std::uint64_t seed);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace sepsync
