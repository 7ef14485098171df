// sepsync command-line front end.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sepsync/comb_phase.hpp"
#include "sepsync/config.hpp"
#include "sepsync/error.hpp"
#include "sepsync/ias.hpp"
#include "sepsync/netsim.hpp"
#include "sepsync/sep_signal.hpp"
#include "sepsync/sync_protocol.hpp"

namespace {

using namespace sepsync;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read input file '" + path + "'");
  return in;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string summary_path(const std::string& out) { return out + ".summary.json"; }

struct SynthArgs {
  std::string config, out = "trace.csv";
  std::optional<std::uint64_t> seed;
  double duration_s = 10.0;
  std::optional<double> strength;
};

void run_synth(const SynthArgs& a) {
  SepSynthesisConfig sep = a.config.empty() ? default_experiment().slave_sep
                                            : load_experiment_config(a.config).slave_sep;
  if (a.seed) sep.rng_seed = *a.seed;
  if (a.strength) sep.signal_strength = *a.strength;
  const SepTrace trace = synthesize_sep(sep, a.duration_s);
  auto out = open_out(a.out);
  write_trace_csv(out, trace);
  std::cout << "samples=" << trace.size() << " strength=" << std::fixed << std::setprecision(4)
            << signal_strength(trace) << '\n';
}

struct ConditionArgs {
  std::string in, out = "zc.csv", comb_out, filter = "bandpass";
  std::size_t window = 7;
  double settle_ms = 1000.0;
};

void run_condition(const ConditionArgs& a) {
  auto in = open_in(a.in);
  const SepTrace trace = read_trace_csv(in);
  ConditioningConfig cc;
  if (a.filter == "bandpass") {
    cc.filter = FilterKind::bandpass;
  } else if (a.filter == "mean_removal") {
    cc.filter = FilterKind::mean_removal;
  } else {
    throw ConfigError("unknown filter '" + a.filter + "'");
  }
  cc.mean_removal_window = a.window;
  cc.settle_ms = a.settle_ms;
  const ZcStream zcs = condition(trace, cc);
  auto out = open_out(a.out);
  write_zc_csv(out, zcs);
  std::cout << "zero_crossings=" << zcs.size() << '\n';
  if (!a.comb_out.empty()) {
    const DiracComb comb = run_pll(zcs, PllConfig{});
    auto cout = open_out(a.comb_out);
    write_comb_csv(cout, comb);
    std::cout << "impulses=" << comb.impulses_ms.size() << " period_ms=" << std::fixed
              << std::setprecision(4) << comb.period_ms << '\n';
  }
}

struct ExperimentArgs {
  std::string config, preset, out, scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, sessions;
  std::optional<double> epsilon_max, wrap_guard;
  std::optional<unsigned> threads;
};

ExperimentConfig experiment_from(const ExperimentArgs& a) {
  ExperimentConfig c = a.config.empty() ? default_experiment() : load_experiment_config(a.config);
  if (!a.scenario.empty()) c.scenario = scenario_from_string(a.scenario);
  if (!a.preset.empty()) c.link = preset_by_name(a.preset);
  if (a.seed) c.seed = *a.seed;
  if (a.trials) c.trials = *a.trials;
  if (a.sessions) c.sessions_per_trial = *a.sessions;
  if (a.threads) c.threads = *a.threads;
  if (a.epsilon_max) {
    c.epsilon.constant_ms = 0.0;
    c.epsilon.max_abs_ms = *a.epsilon_max;
  }
  if (a.wrap_guard) c.solver.wrap_guard_ms = *a.wrap_guard;
  if (c.scenario == Scenario::ntp_baseline && c.sessions_per_trial == 0) c.sessions_per_trial = 10;
  if (!a.out.empty()) c.output_path = a.out;
  return c;
}

void run_session_cmd(ExperimentArgs a) {
  if (!a.sessions) a.sessions = 10;
  a.trials = 1;
  ExperimentConfig c = experiment_from(a);
  c.scenario = Scenario::ntp_baseline;
  const E2eReport report = run_e2e(c);
  std::vector<SessionRecord> records;
  for (const auto& s : report.sessions) records.push_back(s.record);
  auto out = open_out(c.output_path.empty() ? "sessions.csv" : c.output_path);
  write_session_csv(out, records);
  std::cout << "sessions=" << records.size() << " delta_gt_ms=" << std::fixed
            << std::setprecision(3) << report.sessions.front().truth.delta_gt_ms << '\n';
}

void run_e2e_cmd(const ExperimentArgs& a) {
  ExperimentConfig c = experiment_from(a);
  if (c.scenario != Scenario::e2e_sync && c.scenario != Scenario::ntp_baseline) {
    throw ConfigError("e2e runs scenario e2e_sync or ntp_baseline");
  }
  const std::string path = c.output_path.empty() ? "e2e.csv" : c.output_path;
  const E2eReport report = run_e2e(c);
  {
    auto out = open_out(path);
    write_e2e_trials_csv(out, report);
  }
  {
    auto out = open_out(path + ".sessions.csv");
    write_e2e_sessions_csv(out, report);
  }
  const std::string summary = e2e_summary_json(report);
  write_text(summary_path(path), summary);
  std::cout << summary << '\n';
}

struct SolveArgs {
  std::string in, config, out;
  std::optional<double> period;
  std::optional<int> imin, imax, jmin, jmax, max_sessions;
};

void run_solve(const SolveArgs& a) {
  SolverConfig c = a.config.empty() ? SolverConfig{} : load_solver_config(a.config);
  if (a.period) c.period_ms = *a.period;
  if (a.max_sessions) c.max_sessions = *a.max_sessions;
  if (a.imin || a.imax) c.i_bounds = IntRange{a.imin.value_or(0), a.imax.value_or(0)};
  if (a.jmin || a.jmax) c.j_bounds = IntRange{a.jmin.value_or(0), a.jmax.value_or(0)};
  validate(c);

  auto in = open_in(a.in);
  const auto records = read_session_csv(in);
  for (const auto& r : records) validate(r, c.period_ms);
  std::size_t cursor = 0;
  const SolveResult res = solve(
      [&]() -> std::optional<SessionRecord> {
        if (cursor == records.size()) return std::nullopt;
        return records[cursor++];
      },
      c);

  std::cout << std::fixed << std::setprecision(3);
  for (std::size_t s = 0; s < res.candidates.size(); ++s) {
    std::cout << "session " << s + 1 << " candidates:";
    for (const auto& cand : res.candidates[s]) {
      std::cout << ' ' << cand.delta_ms << " (i=" << cand.i << ",j=" << cand.j << ")";
    }
    std::cout << '\n';
  }
  std::cout << "status=" << to_string(res.status);
  if (res.converged()) std::cout << " delta_ms=" << res.delta_ms;
  std::cout << " K=" << res.sessions << " sessions_used=" << res.total_sessions
            << " restarts=" << res.restarts << '\n';
  if (!res.converged()) {
    std::cout << "remaining:";
    for (const auto& cl : res.space.clusters) std::cout << ' ' << cl.representative;
    std::cout << '\n';
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << "session,i,j,delta_ms\n" << std::fixed << std::setprecision(3);
    for (std::size_t s = 0; s < res.candidates.size(); ++s) {
      for (const auto& cand : res.candidates[s]) {
        out << s + 1 << ',' << cand.i << ',' << cand.j << ',' << cand.delta_ms << '\n';
      }
    }
  }
  if (!res.converged()) throw std::runtime_error("solver did not converge: " + to_string(res.status));
}

struct StudyArgs {
  std::string config, out = "study.csv";
  std::optional<int> imax, jmax, trials, max_sessions;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool prior = false, grid = false;
};

void run_study(const StudyArgs& a) {
  StudyConfig c = a.config.empty() ? StudyConfig{} : load_study_config(a.config);
  if (a.imax) c.i_max = *a.imax;
  if (a.jmax) c.j_max = *a.jmax;
  if (a.trials) c.trials = *a.trials;
  if (a.seed) c.seed = *a.seed;
  if (a.threads) c.threads = *a.threads;
  if (a.max_sessions) c.max_sessions = *a.max_sessions;
  if (a.prior) c.prior_knowledge = true;
  validate(c);

  if (a.grid) {
    auto out = open_out(a.out);
    out << "i_max,j_max,mean_K,convergence_rate\n" << std::fixed << std::setprecision(4);
    for (int i = 0; i <= c.i_max; ++i) {
      for (int j = 0; j <= c.j_max; ++j) {
        StudyConfig cell = c;
        cell.i_max = i;
        cell.j_max = j;
        const StudyResult r = convergence_study(cell);
        out << i << ',' << j << ',' << r.k_summary.mean << ',' << r.convergence_rate << '\n';
      }
    }
    std::cout << "grid written to " << a.out << '\n';
    return;
  }
  const StudyResult r = convergence_study(c);
  {
    auto out = open_out(a.out);
    write_study_csv(out, r);
  }
  const std::string summary = study_summary_json(r);
  write_text(summary_path(a.out), summary);
  std::cout << summary << '\n';
}

struct SweepArgs {
  std::string config, out = "sweep.csv";
  std::optional<std::uint64_t> seed;
};

void run_sweep(const SweepArgs& a) {
  SweepConfig c = a.config.empty() ? default_sweep() : load_sweep_config(a.config);
  if (a.seed) c.baseline.rng_seed = *a.seed;
  const SweepReport r = run_strength_sweep(c);
  auto out = open_out(a.out);
  write_sweep_csv(out, r);
  std::cout << "baseline_strength=" << std::fixed << std::setprecision(4) << r.baseline_strength
            << " baseline_zc=" << r.baseline_zc_count << '\n';
  for (const auto& row : r.rows) {
    std::cout << "ratio=" << std::defaultfloat << row.ratio << std::fixed
              << " strength=" << std::setprecision(5) << row.strength;
    if (row.detected) {
      std::cout << " mae_ms=" << std::setprecision(4) << row.mae_ms << '\n';
    } else {
      std::cout << " detection_failed\n";
    }
  }
}

struct BenchArgs {
  std::string config, out = "bench.csv";
  std::optional<std::uint64_t> seed;
};

void run_bench(const BenchArgs& a) {
  std::uint64_t seed = a.config.empty() ? 1 : load_bench_seed(a.config);
  if (a.seed) seed = *a.seed;
  const auto rows = run_pipeline_bench(seed);
  auto out = open_out(a.out);
  write_bench_csv(out, rows);
  write_bench_csv(std::cout, rows);
}

void add_experiment_flags(CLI::App* cmd, ExperimentArgs& a) {
  cmd->add_option("--config", a.config, "Experiment config file (INI)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", a.preset, "Link preset: ble, internet or constant");
  cmd->add_option("--seed", a.seed, "Master seed");
  cmd->add_option("--trials", a.trials, "Number of trials");
  cmd->add_option("--sessions", a.sessions, "Sessions per trial (ntp_baseline)");
  cmd->add_option("--epsilon-max", a.epsilon_max, "Draw epsilon uniformly from [-x, x] ms");
  cmd->add_option("--wrap-guard", a.wrap_guard, "Solver bound on |epsilon| in ms");
  cmd->add_option("--threads", a.threads, "Worker threads (0 = hardware)");
  cmd->add_option("--out", a.out, "Output CSV path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sepsync: clock synchronization over a shared mains-frequency signal"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a quantized SEP trace");
  synth_cmd->add_option("--config", synth.config, "Experiment config; its slave SEP is used")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", synth.seed, "Signal seed");
  synth_cmd->add_option("--duration", synth.duration_s, "Duration in seconds");
  synth_cmd->add_option("--strength", synth.strength, "Signal strength (std over 0.3536)");
  synth_cmd->add_option("--out", synth.out, "Output trace CSV");
  synth_cmd->callback([&] { run_synth(synth); });

  ConditionArgs cond;
  auto* cond_cmd = app.add_subcommand("condition", "Filter a trace and detect zero crossings");
  cond_cmd->add_option("--in", cond.in, "Input trace CSV (time_ms,amplitude)")->required();
  cond_cmd->add_option("--filter", cond.filter, "bandpass or mean_removal");
  cond_cmd->add_option("--window", cond.window, "Mean-removal window in samples");
  cond_cmd->add_option("--settle-ms", cond.settle_ms, "Filter output discarded at the start");
  cond_cmd->add_option("--out", cond.out, "Output zero-crossing CSV");
  cond_cmd->add_option("--comb-out", cond.comb_out, "Also run the PLL and write the comb CSV");
  cond_cmd->callback([&] { run_condition(cond); });

  ExperimentArgs session;
  auto* session_cmd =
      app.add_subcommand("session", "Simulate synchronization sessions and log them");
  add_experiment_flags(session_cmd, session);
  session_cmd->callback([&] { run_session_cmd(session); });

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Resolve the clock offset from a session log");
  solve_cmd->add_option("--in", solve_args.in, "Session CSV")->required();
  solve_cmd->add_option("--config", solve_args.config, "Config with a [solver] section")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--period", solve_args.period, "Comb period T in ms");
  solve_cmd->add_option("--imin", solve_args.imin, "Lower bound on i");
  solve_cmd->add_option("--imax", solve_args.imax, "Upper bound on i");
  solve_cmd->add_option("--jmin", solve_args.jmin, "Lower bound on j");
  solve_cmd->add_option("--jmax", solve_args.jmax, "Upper bound on j");
  solve_cmd->add_option("--max-sessions", solve_args.max_sessions, "Session cap");
  solve_cmd->add_option("--out", solve_args.out, "Write the candidate log CSV");
  solve_cmd->callback([&] { run_solve(solve_args); });

  StudyArgs study;
  auto* study_cmd = app.add_subcommand("study", "Monte Carlo convergence study of the solver");
  study_cmd->add_option("--config", study.config, "Study config file")->check(CLI::ExistingFile);
  study_cmd->add_option("--imax", study.imax, "Largest i drawn");
  study_cmd->add_option("--jmax", study.jmax, "Largest j drawn");
  study_cmd->add_option("--trials", study.trials, "Number of trials");
  study_cmd->add_option("--seed", study.seed, "Master seed");
  study_cmd->add_option("--threads", study.threads, "Worker threads (0 = hardware)");
  study_cmd->add_option("--max-sessions", study.max_sessions, "Session cap per trial");
  study_cmd->add_flag("--prior", study.prior, "Give the solver the true [0, imax] x [0, jmax]");
  study_cmd->add_flag("--grid", study.grid, "Mean K for every imax' <= imax, jmax' <= jmax");
  study_cmd->add_option("--out", study.out, "Output CSV path");
  study_cmd->callback([&] { run_study(study); });

  ExperimentArgs e2e;
  auto* e2e_cmd = app.add_subcommand("e2e", "End-to-end synchronization experiment");
  add_experiment_flags(e2e_cmd, e2e);
  e2e_cmd->add_option("--scenario", e2e.scenario, "e2e_sync or ntp_baseline");
  e2e_cmd->callback([&] { run_e2e_cmd(e2e); });

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Zero-crossing error versus signal strength");
  sweep_cmd->add_option("--config", sweep.config, "Sweep config file")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--seed", sweep.seed, "Signal seed");
  sweep_cmd->add_option("--out", sweep.out, "Output CSV path");
  sweep_cmd->callback([&] { run_sweep(sweep); });

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Filter and PLL behavior on synthetic streams");
  bench_cmd->add_option("--config", bench.config, "Bench config file")->check(CLI::ExistingFile);
  bench_cmd->add_option("--seed", bench.seed, "Seed");
  bench_cmd->add_option("--out", bench.out, "Output CSV path");
  bench_cmd->callback([&] { run_bench(bench); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) std::cerr << "error: ";
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
