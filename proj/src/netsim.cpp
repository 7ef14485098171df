#include "sepsync/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "sepsync/bpf_coefficients.hpp"
#include "sepsync/comb_phase.hpp"
#include "sepsync/error.hpp"
#include "sepsync/parallel.hpp"
#include "sepsync/rng.hpp"

namespace sepsync {
namespace {

constexpr double kTimelineStartMs = 10'000.0;
constexpr double kBufferMarginMs = 50.0;

// Stream tags for derive_seed.
enum : std::uint64_t { kTrialStream = 0, kSlaveSepStream = 1, kMasterSepStream = 2 };

double uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

nlohmann::ordered_json summary_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean},     {"min", s.min}, {"q1", s.q1},
          {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

// SEP buffer for one node covering [from_local, to_local] plus the margin.
SepTrace node_buffer(SepSynthesisConfig cfg, const NodeClock& clock, double from_local_ms,
                     double to_local_ms, std::uint64_t seed) {
  cfg.clock = clock;
  cfg.rng_seed = seed;
  cfg.start_time_ms = from_local_ms - kBufferMarginMs;
  const double duration_s = (to_local_ms - from_local_ms + 2.0 * kBufferMarginMs) / 1000.0;
  return synthesize_sep(cfg, duration_s);
}

struct TrialRun {
  E2eTrial trial;
  std::vector<E2eSession> sessions;
};

TrialRun run_trial(const ExperimentConfig& config, int index) {
  const auto t = static_cast<std::uint64_t>(index);
  Rng rng(derive_seed(config.seed, t, kTrialStream));

  const auto draw_clock = [&] {
    NodeClock c;
    c.offset_ms = uniform(rng, -config.offset_range_ms, config.offset_range_ms);
    c.drift_ppm = uniform(rng, -config.drift_ppm_max, config.drift_ppm_max);
    return c;
  };
  const NodeClock slave_clock = draw_clock();
  const NodeClock master_clock = draw_clock();

  const EpsilonModel& em = config.epsilon;
  const double epsilon =
      em.max_abs_ms > 0.0 ? uniform(rng, -em.max_abs_ms, em.max_abs_ms) : em.constant_ms;
  const double carrier_phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);

  SepSynthesisConfig slave_sep = config.slave_sep;
  slave_sep.phase_offset_ms = epsilon;
  slave_sep.phase_wander_amplitude_ms = em.wander_amplitude_ms;
  slave_sep.phase_wander_period_s = em.wander_period_s;
  slave_sep.carrier_phase_rad = carrier_phase;
  SepSynthesisConfig master_sep = config.master_sep;
  master_sep.phase_offset_ms = 0.0;
  master_sep.phase_wander_amplitude_ms = 0.0;
  master_sep.carrier_phase_rad = carrier_phase;

  const SessionOptions& opts = config.session;
  const double lead = opts.safeguard_ms + opts.pipeline.conditioning.settle_ms;
  const std::uint64_t slave_seed = derive_seed(config.seed, t, kSlaveSepStream);
  const std::uint64_t master_seed = derive_seed(config.seed, t, kMasterSepStream);

  TrialRun run;
  run.trial.trial = index;
  run.trial.epsilon_ms = epsilon;
  double now = kTimelineStartMs;
  int attempt = 0;
  std::optional<SessionTruth> last_truth;

  // Next completed session on the timeline; aborted attempts are counted
  // and retried.
  const auto next_session = [&]() -> SessionOutcome {
    for (;;) {
      const SessionDelays d = draw_session_delays(config.link, rng);
      const int k = ++attempt;
      const double r1 = now;
      if (d.request_dropped || d.reply1_dropped) {
        ++run.trial.drops;
        now = aborted_session_end(r1, opts) + config.session_gap_ms;
        continue;
      }
      const double r2 = r1 + d.request_ms;
      const double r3 = r2 + opts.compute_delay_ms;
      const double r4 = r3 + d.reply1_ms;
      const SyncNode slave{slave_clock,
                           node_buffer(slave_sep, slave_clock, slave_clock.read(r1) - lead,
                                       slave_clock.read(r4) + opts.safeguard_ms,
                                       derive_seed(slave_seed, static_cast<std::uint64_t>(k))),
                           slave_sep};
      const SyncNode master{
          master_clock,
          node_buffer(master_sep, master_clock, master_clock.read(r2) - lead,
                      master_clock.read(r3) + opts.safeguard_ms,
                      derive_seed(master_seed, static_cast<std::uint64_t>(k))),
          master_sep};
      try {
        SessionOutcome out = run_session(k, r1, slave, master, d, opts);
        now = out.end_reference_ms + config.session_gap_ms;
        return out;
      } catch (const LockError&) {
      } catch (const CoverageError&) {
      }
      ++run.trial.drops;
      now = aborted_session_end(r1, opts) + opts.safeguard_ms + config.session_gap_ms;
    }
  };
  const auto log = [&](const SessionOutcome& out) {
    E2eSession s;
    s.trial = index;
    s.record = out.record;
    s.truth = out.truth;
    s.ntp_error_ms = ntp_offset(out.record) - out.truth.delta_gt_ms;
    run.sessions.push_back(s);
    last_truth = out.truth;
  };

  SolveResult solved;
  if (config.sessions_per_trial > 0) {
    std::vector<SessionRecord> records;
    for (int n = 0; n < config.sessions_per_trial; ++n) {
      const SessionOutcome out = next_session();
      log(out);
      records.push_back(out.record);
    }
    std::size_t cursor = 0;
    std::vector<SessionTruth> truths;
    for (const auto& s : run.sessions) truths.push_back(s.truth);
    solved = solve(
        [&]() -> std::optional<SessionRecord> {
          if (cursor == records.size()) return std::nullopt;
          last_truth = truths[cursor];
          return records[cursor++];
        },
        config.solver);
  } else {
    solved = solve(
        [&]() -> std::optional<SessionRecord> {
          const SessionOutcome out = next_session();
          log(out);
          return out.record;
        },
        config.solver);
  }

  E2eTrial& tr = run.trial;
  tr.status = solved.status;
  tr.k = solved.sessions;
  tr.total_sessions = solved.total_sessions;
  tr.restarts = solved.restarts;
  tr.delta_gt_ms = last_truth ? last_truth->delta_gt_ms : 0.0;
  if (solved.converged()) {
    tr.delta_ms = solved.delta_ms;
    tr.delta_error_ms = solved.delta_ms - tr.delta_gt_ms;
  }
  return run;
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::e2e_sync:
      return "e2e_sync";
    case Scenario::ntp_baseline:
      return "ntp_baseline";
    case Scenario::convergence_study:
      return "convergence_study";
    case Scenario::pipeline_bench:
      return "pipeline_bench";
    case Scenario::strength_sweep:
      return "strength_sweep";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  for (auto s : {Scenario::e2e_sync, Scenario::ntp_baseline, Scenario::convergence_study,
                 Scenario::pipeline_bench, Scenario::strength_sweep}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

double EpsilonModel::bound() const {
  return std::max(std::abs(constant_ms), max_abs_ms) + std::abs(wander_amplitude_ms);
}

void validate(const ExperimentConfig& c) {
  validate(c.link);
  validate(c.slave_sep);
  validate(c.master_sep);
  validate(c.solver);
  validate(c.session.pipeline.pll);
  if (c.epsilon.max_abs_ms < 0.0) throw ConfigError("epsilon max_abs_ms must be >= 0");
  if (!(c.epsilon.wander_period_s > 0.0)) throw ConfigError("epsilon wander period must be > 0");
  if (!(c.session.period_ms > 0.0)) throw ConfigError("session period must be positive");
  if (c.session.period_ms != c.solver.period_ms) {
    throw ConfigError("session and solver comb periods differ");
  }
  if (c.session.compute_delay_ms < 0.0 || c.session.safeguard_ms < 0.0 ||
      !(c.session.reply_timeout_ms > 0.0)) {
    throw ConfigError("session timings must be non-negative with a positive reply timeout");
  }
  if (c.scenario == Scenario::e2e_sync || c.scenario == Scenario::ntp_baseline) {
    if (!(c.epsilon.bound() < c.solver.period_ms / 2.0)) {
      throw ConfigError("epsilon bound must stay below T/2");
    }
  }
  if (c.drift_ppm_max < 0.0 || c.drift_ppm_max > kMaxDriftPpm) {
    throw ConfigError("drift_ppm_max must be in [0, 100]");
  }
  if (c.offset_range_ms < 0.0) throw ConfigError("offset range must be >= 0");
  if (c.session_gap_ms < 0.0) throw ConfigError("session gap must be >= 0");
  if (c.sessions_per_trial < 0) throw ConfigError("sessions_per_trial must be >= 0");
  if (c.scenario == Scenario::ntp_baseline && c.sessions_per_trial == 0) {
    throw ConfigError("ntp_baseline needs sessions_per_trial > 0");
  }
  if (c.trials < 1) throw ConfigError("trials must be at least 1");
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.link = ble_preset();
  c.slave_sep.signal_strength = 0.10;
  c.slave_sep.noise_sigma = 0.002;
  c.slave_sep.amplitude_mod_depth = 0.3;
  c.slave_sep.dc_drift = 0.01;
  c.master_sep = c.slave_sep;
  c.master_sep.signal_strength = 0.12;
  c.epsilon.max_abs_ms = 2.0;
  c.drift_ppm_max = 10.0;
  return c;
}

E2eReport run_e2e(const ExperimentConfig& config) {
  validate(config);
  std::vector<TrialRun> runs(static_cast<std::size_t>(config.trials));
  parallel_for(
      runs.size(), [&](std::size_t t) { runs[t] = run_trial(config, static_cast<int>(t)); },
      config.threads);

  E2eReport report;
  std::vector<double> errors, ks, ntp;
  for (auto& run : runs) {
    report.trials.push_back(run.trial);
    if (run.trial.converged()) {
      errors.push_back(run.trial.delta_error_ms);
      ks.push_back(run.trial.k);
      report.summary.max_abs_error_ms =
          std::max(report.summary.max_abs_error_ms, std::abs(run.trial.delta_error_ms));
    }
    for (auto& s : run.sessions) {
      ntp.push_back(std::abs(s.ntp_error_ms));
      report.sessions.push_back(std::move(s));
    }
  }
  E2eSummary& sum = report.summary;
  sum.trials = config.trials;
  sum.converged = static_cast<int>(errors.size());
  sum.sessions = static_cast<int>(ntp.size());
  if (!ntp.empty()) {
    sum.ntp_fraction_over_25ms =
        static_cast<double>(std::count_if(ntp.begin(), ntp.end(),
                                          [](double e) { return e > 25.0; })) /
        static_cast<double>(ntp.size());
    sum.ntp_max_abs_error_ms = *std::max_element(ntp.begin(), ntp.end());
  }
  sum.error = summarize(std::move(errors));
  sum.k = summarize(std::move(ks));
  sum.ntp_abs_error = summarize(std::move(ntp));
  return report;
}

void write_e2e_trials_csv(std::ostream& out, const E2eReport& report) {
  out << "trial,status,K,total_sessions,drops,restarts,epsilon_ms,delta_gt_ms,delta_ms,"
         "delta_error_ms\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& t : report.trials) {
    out << t.trial << ',' << to_string(t.status) << ',' << t.k << ',' << t.total_sessions << ','
        << t.drops << ',' << t.restarts << ',' << t.epsilon_ms << ',' << t.delta_gt_ms << ','
        << t.delta_ms << ',' << t.delta_error_ms << '\n';
  }
}

void write_e2e_sessions_csv(std::ostream& out, const E2eReport& report) {
  out << "trial,k,t1,t2,t3,t4,phi1,phi2,phi3,phi4,thetaq,thetap,rtt,tau_q_ms,tau_p_ms,"
         "epsilon_ms,delta_gt_ms,i,j,ntp_error_ms\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& s : report.sessions) {
    const auto& r = s.record;
    const auto& g = s.truth;
    out << s.trial << ',' << r.k << ',' << r.t1 << ',' << r.t2 << ',' << r.t3 << ',' << r.t4
        << ',' << r.phi1 << ',' << r.phi2 << ',' << r.phi3 << ',' << r.phi4 << ','
        << r.theta_q << ',' << r.theta_p << ',' << r.rtt << ',' << g.tau_q_ms << ','
        << g.tau_p_ms << ',' << g.epsilon_ms << ',' << g.delta_gt_ms << ',' << g.i << ','
        << g.j << ',' << s.ntp_error_ms << '\n';
  }
}

std::string e2e_summary_json(const E2eReport& report) {
  const E2eSummary& s = report.summary;
  nlohmann::ordered_json j;
  j["trials"] = s.trials;
  j["converged"] = s.converged;
  j["max_abs_error_ms"] = s.max_abs_error_ms;
  j["delta_error_ms"] = summary_json(s.error);
  j["K"] = summary_json(s.k);
  j["sessions"] = s.sessions;
  j["ntp_abs_error_ms"] = summary_json(s.ntp_abs_error);
  j["ntp_fraction_over_25ms"] = s.ntp_fraction_over_25ms;
  j["ntp_max_abs_error_ms"] = s.ntp_max_abs_error_ms;
  return j.dump(2);
}

SweepConfig default_sweep() {
  SweepConfig c;
  c.baseline.signal_strength = 0.34;
  c.baseline.noise_sigma = 0.002;
  c.baseline.amplitude_mod_depth = 0.2;
  return c;
}

std::optional<double> zc_mae(const std::vector<double>& baseline,
                             const std::vector<double>& other) {
  if (other.empty() || baseline.empty()) return std::nullopt;
  double total = 0.0;
  for (double b : baseline) {
    const auto it = std::lower_bound(other.begin(), other.end(), b);
    double best = std::numeric_limits<double>::infinity();
    if (it != other.end()) best = *it - b;
    if (it != other.begin()) best = std::min(best, b - *(it - 1));
    total += best;
  }
  return total / static_cast<double>(baseline.size());
}

SweepReport run_strength_sweep(const SweepConfig& config) {
  validate(config.baseline);
  if (!(config.baseline.signal_strength > 0.0)) {
    throw ConfigError("sweep baseline strength must be positive");
  }
  for (double r : config.ratios) {
    if (!(r >= 1.0)) throw ConfigError("sweep ratios must be >= 1");
  }
  const int bits = config.baseline.quantization_bits;
  const SepTrace base = synthesize_sep(config.baseline, config.duration_s);
  const ZcStream base_zc = condition(base, config.conditioning);

  double mean = 0.0;
  for (double x : base.samples) mean += x;
  mean /= static_cast<double>(base.size());
  const double levels = std::ldexp(1.0, bits);
  const double mid = std::round(mean * levels) / levels;

  SweepReport report;
  report.baseline_strength = signal_strength(base);
  report.baseline_zc_count = base_zc.size();
  for (double ratio : config.ratios) {
    SepTrace scaled = base;
    for (double& x : scaled.samples) x = std::clamp(mid + (x - mid) / ratio, 0.0, 1.0);
    scaled = quantize(scaled, bits);
    SweepRow row;
    row.ratio = ratio;
    row.strength = signal_strength(scaled);
    if (row.strength > 0.0) {
      const ZcStream zc = condition(scaled, config.conditioning);
      row.zc_count = zc.size();
      if (const auto mae = zc_mae(base_zc.crossings_ms, zc.crossings_ms)) {
        row.detected = true;
        row.mae_ms = *mae;
      }
    }
    report.rows.push_back(row);
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "ratio,strength,zc_count,detected,mae_ms\n";
  for (const auto& r : report.rows) {
    out << std::defaultfloat << r.ratio << ',' << std::fixed << std::setprecision(6)
        << r.strength << ',' << r.zc_count << ',' << (r.detected ? 1 : 0) << ','
        << std::setprecision(4) << r.mae_ms << '\n';
  }
}

namespace {

double gain_db(const SepTrace& in, const SepTrace& out, std::size_t skip) {
  double pin = 0.0, pout = 0.0;
  for (std::size_t k = skip; k < in.size(); ++k) {
    pin += in.samples[k] * in.samples[k];
    pout += out.samples[k] * out.samples[k];
  }
  return 10.0 * std::log10(std::max(pout, 1e-300) / pin);
}

SepTrace tone(double freq_hz, double seconds) {
  SepTrace t;
  t.sample_rate_hz = bpf::kDesignSampleRateHz;
  t.centered = true;
  const auto n = static_cast<std::size_t>(seconds * t.sample_rate_hz);
  for (std::size_t k = 0; k < n; ++k) {
    t.samples.push_back(
        freq_hz == 0.0 ? 1.0 : std::sin(2.0 * std::numbers::pi * freq_hz * k / t.sample_rate_hz));
  }
  return t;
}

double interval_spread(const DiracComb& comb, std::size_t skip) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = skip + 1; k < comb.impulses_ms.size(); ++k) {
    const double gap = comb.impulses_ms[k] - comb.impulses_ms[k - 1];
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
  }
  return hi - lo;
}

}  // namespace

std::vector<BenchRow> run_pipeline_bench(std::uint64_t seed) {
  std::vector<BenchRow> rows;
  const std::size_t settle = static_cast<std::size_t>(2.0 * bpf::kDesignSampleRateHz);

  for (double f : {0.0, 45.0, 50.0, 55.0, 150.0}) {
    const SepTrace in = tone(f, 5.0);
    rows.push_back({"bpf_gain_db_" + std::to_string(static_cast<int>(f)) + "hz",
                    gain_db(in, bandpass_filter(in), settle)});
  }

  Rng rng(derive_seed(seed, 0, 7));
  const PllConfig pll{};
  const double T = pll.nominal_period_ms;

  // Jittered crossings, uniform +-6 ms around a 20 ms grid.
  {
    ZcStream z;
    std::uniform_real_distribution<double> jitter(-6.0, 6.0);
    for (int n = 0; n < 2000; ++n) z.crossings_ms.push_back(1000.0 + n * T + jitter(rng));
    double lo = 1e9, hi = -1e9;
    for (std::size_t k = 1; k < z.size(); ++k) {
      const double gap = z.crossings_ms[k] - z.crossings_ms[k - 1];
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
    rows.push_back({"pll_jitter_in_spread_ms", hi - lo});
    rows.push_back({"pll_jitter_out_spread_ms", interval_spread(run_pll(z, pll), 100)});
  }

  // 50-crossing outage on a slightly off-nominal grid with small jitter.
  {
    constexpr double kTrue = 20.04;
    constexpr int kGapStart = 500, kGapLen = 50, kTotal = 1000;
    std::normal_distribution<double> jitter(0.0, 0.2);
    std::vector<double> truth;
    ZcStream z;
    for (int n = 0; n < kTotal; ++n) {
      truth.push_back(1000.0 + n * kTrue);
      if (n < kGapStart || n >= kGapStart + kGapLen) {
        z.crossings_ms.push_back(truth.back() + jitter(rng));
      }
    }
    const DiracComb comb = run_pll(z, pll);
    const double gap_from = truth[kGapStart] - kTrue / 2;
    const double gap_to = truth[kGapStart + kGapLen] - kTrue / 2;
    double worst = 0.0;
    for (double t : comb.impulses_ms) {
      if (t < gap_from || t > gap_to) continue;
      const auto it = std::lower_bound(truth.begin(), truth.end(), t);
      double d = std::numeric_limits<double>::infinity();
      if (it != truth.end()) d = *it - t;
      if (it != truth.begin()) d = std::min(d, t - *(it - 1));
      worst = std::max(worst, d);
    }
    rows.push_back({"outage_max_drift_ms", worst});
    int recovery = -1;
    for (int n = kGapStart + kGapLen; n < kTotal; ++n) {
      const double d = std::abs(displacement(comb, truth[n]));
      if (d < 1.0) {
        recovery = n - (kGapStart + kGapLen);
        break;
      }
    }
    rows.push_back({"outage_recovery_zcs", static_cast<double>(recovery)});
  }

  // Lock time on a conditioned synthetic SEP stream.
  {
    SepSynthesisConfig sep;
    sep.signal_strength = 0.1;
    sep.noise_sigma = 0.002;
    sep.amplitude_mod_depth = 0.3;
    sep.rng_seed = derive_seed(seed, 0, 8);
    const ZcStream z = condition(synthesize_sep(sep, 12.0));
    const PllConvergence conv = pll_convergence_time(z, pll);
    rows.push_back({"pll_convergence_s", conv.converged ? conv.seconds : -1.0});
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "metric,value\n";
  for (const auto& r : rows) out << r.metric << ',' << std::fixed << std::setprecision(6) << r.value << '\n';
}

}  // namespace sepsync
