#include "sepsync/ias.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "sepsync/error.hpp"
#include "sepsync/parallel.hpp"
#include "sepsync/rng.hpp"

namespace sepsync {
namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Representatives that drifted closer than T/2 (two clusters absorbed the
// same delta) are merged so the separation invariant holds again.
void merge_close(std::vector<Cluster>& clusters, double half_period) {
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.representative < b.representative; });
  std::vector<Cluster> merged;
  for (auto& c : clusters) {
    if (!merged.empty() && c.representative - merged.back().representative < half_period) {
      auto& m = merged.back().members;
      m.insert(m.end(), c.members.begin(), c.members.end());
      merged.back().representative = mean_of(m);
    } else {
      merged.push_back(std::move(c));
    }
  }
  clusters = std::move(merged);
}

}  // namespace

SolutionSpace intersect(SolutionSpace space, std::span<const double> new_candidates,
                        double period_ms) {
  if (new_candidates.empty()) throw ConfigError("intersect needs at least one candidate");
  if (!(period_ms > 0.0)) throw ConfigError("comb period must be positive");
  const double half = period_ms / 2.0;

  if (space.sessions_seen == 0) {
    space.clusters.clear();
    for (double d : new_candidates) space.clusters.push_back({{d}, d});
  } else {
    std::vector<Cluster> survivors;
    for (auto& cluster : space.clusters) {
      const double* best = nullptr;
      for (const double& d : new_candidates) {
        if (!best || std::abs(d - cluster.representative) < std::abs(*best - cluster.representative)) {
          best = &d;
        }
      }
      if (std::abs(*best - cluster.representative) < half) {
        cluster.members.push_back(*best);
        cluster.representative = mean_of(cluster.members);
        survivors.push_back(std::move(cluster));
      }
    }
    space.clusters = std::move(survivors);
  }
  merge_close(space.clusters, half);
  ++space.sessions_seen;
  if (space.clusters.empty()) {
    throw EmptySolutionSpace("no candidate offset survived session " +
                             std::to_string(space.sessions_seen));
  }
  return space;
}

void validate(const SolverConfig& c) {
  if (!(c.period_ms > 0.0)) throw ConfigError("solver period must be positive");
  if (c.max_sessions < 1) throw ConfigError("max_sessions must be at least 1");
  if (c.retry_budget < 0) throw ConfigError("retry budget must be non-negative");
  for (const auto& r : {c.i_bounds, c.j_bounds}) {
    if (r && (r->min < 0 || r->max < r->min)) {
      throw ConfigError("ambiguity bounds must be non-empty and non-negative");
    }
  }
  if (!(c.wrap_guard_ms >= 0.0 && c.wrap_guard_ms < c.period_ms / 2.0)) {
    throw ConfigError("wrap guard must be in [0, T/2)");
  }
  const double tol = c.match_tol();
  if (!(tol > 0.0 && tol < c.period_ms / 2.0)) {
    throw ConfigError("match tolerance must be in (0, T/2)");
  }
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_sessions_reached:
      return "max_sessions_reached";
    case SolveStatus::retry_budget_exhausted:
      return "retry_budget_exhausted";
    case SolveStatus::source_exhausted:
      return "source_exhausted";
  }
  return "unknown";
}

SolveResult solve(const SessionSource& source, const SolverConfig& config) {
  validate(config);
  SolveResult res;
  bool use_prior = true;
  for (;;) {
    if (res.total_sessions >= config.max_sessions) {
      res.status = SolveStatus::max_sessions_reached;
      return res;
    }
    const auto record = source();
    if (!record) {
      res.status = SolveStatus::source_exhausted;
      return res;
    }
    ++res.total_sessions;
    ++res.sessions;

    std::vector<Candidate> candidates;
    try {
      const bool prior = use_prior && (config.i_bounds || config.j_bounds);
      candidates = prior ? candidate_offsets(*record, config.period_ms, config.i_bounds,
                                             config.j_bounds, config.match_tol())
                         : guarded_candidate_offsets(*record, config.period_ms,
                                                     config.match_tol(), config.wrap_guard_ms);
    } catch (const NoCandidates&) {
      ++res.rejected_sessions;
      continue;
    }
    std::vector<double> deltas;
    deltas.reserve(candidates.size());
    for (const auto& c : candidates) deltas.push_back(c.delta_ms);

    try {
      res.space = intersect(std::move(res.space), deltas, config.period_ms);
    } catch (const EmptySolutionSpace&) {
      if (res.restarts >= config.retry_budget) {
        res.status = SolveStatus::retry_budget_exhausted;
        return res;
      }
      ++res.restarts;
      res.space = {};
      res.sessions = 0;
      res.candidates.clear();
      use_prior = false;
      continue;
    }
    res.candidates.push_back(std::move(candidates));
    if (res.space.converged()) {
      res.status = SolveStatus::converged;
      res.delta_ms = res.space.clusters.front().representative;
      return res;
    }
  }
}

void validate(const StudyConfig& c) {
  if (c.trials < 1) throw ConfigError("study needs at least one trial");
  if (c.i_max < 0 || c.j_max < 0) throw ConfigError("i_max and j_max must be non-negative");
  if (!(c.period_ms > 0.0)) throw ConfigError("study period must be positive");
  if (c.max_sessions < 1) throw ConfigError("max_sessions must be at least 1");
}

StudyResult convergence_study(const StudyConfig& config) {
  validate(config);
  constexpr double kQuantum = kTimestampResolutionMs;
  const double T = config.period_ms;

  SolverConfig solver;
  solver.period_ms = T;
  solver.max_sessions = config.max_sessions;
  if (config.prior_knowledge) {
    solver.i_bounds = IntRange{0, config.i_max};
    solver.j_bounds = IntRange{0, config.j_max};
  }

  StudyResult result;
  result.config = config;
  result.trials.resize(static_cast<std::size_t>(config.trials));

  parallel_for(
      result.trials.size(),
      [&](std::size_t trial) {
        Rng rng(derive_seed(config.seed, trial));
        std::uniform_int_distribution<int> draw_i(0, config.i_max);
        std::uniform_int_distribution<int> draw_j(0, config.j_max);
        const auto steps = static_cast<long long>(std::llround(T / kQuantum));
        std::uniform_int_distribution<long long> draw_phase(0, steps - 1);
        std::uniform_int_distribution<long long> draw_offset(-1'000'000, 1'000'000);
        auto phase = [&] { return static_cast<double>(draw_phase(rng)) * kQuantum; };

        const double delta_gt = static_cast<double>(draw_offset(rng)) * kQuantum;
        int k = 0;
        SessionSource source = [&]() -> std::optional<SessionRecord> {
          ++k;
          const int i = draw_i(rng);
          const int j = draw_j(rng);
          const double theta_q = phase();
          const double theta_p = phase();
          const double phi1 = phase();
          const double phi3 = phase();
          const double tau_q = theta_q + i * T;
          const double tau_p = theta_p + j * T;
          const double t1 = 10'000.0 * k;
          const double t2 = t1 - delta_gt + tau_q;
          const double t3 = t2 + 2.0;
          const double t4 = t3 + delta_gt + tau_p;
          return make_record(k, t1, t2, t3, t4, phi1, std::fmod(phi1 + theta_q, T), phi3,
                             std::fmod(phi3 + theta_p, T), T);
        };
        const SolveResult solved = solve(source, solver);
        StudyTrial& out = result.trials[trial];
        out.trial = static_cast<int>(trial);
        out.k = solved.sessions;
        out.converged = solved.converged();
        out.delta_error_ms = solved.converged() ? solved.delta_ms - delta_gt : 0.0;
      },
      config.threads);

  std::vector<double> ks;
  ks.reserve(result.trials.size());
  for (const auto& t : result.trials) {
    if (t.converged) ks.push_back(t.k);
  }
  result.convergence_rate =
      static_cast<double>(ks.size()) / static_cast<double>(result.trials.size());
  result.k_summary = summarize(std::move(ks));
  return result;
}

void write_study_csv(std::ostream& out, const StudyResult& result) {
  out << "trial,K,converged,delta_error_ms\n";
  for (const auto& t : result.trials) {
    out << t.trial << ',' << t.k << ',' << (t.converged ? 1 : 0) << ',' << std::fixed
        << std::setprecision(3) << t.delta_error_ms << '\n';
  }
}

std::string study_summary_json(const StudyResult& result) {
  const auto& s = result.k_summary;
  nlohmann::ordered_json j;
  j["scenario"] = "convergence_study";
  j["i_max"] = result.config.i_max;
  j["j_max"] = result.config.j_max;
  j["trials"] = result.config.trials;
  j["seed"] = result.config.seed;
  j["prior_knowledge"] = result.config.prior_knowledge;
  j["convergence_rate"] = result.convergence_rate;
  j["K"] = {{"mean", s.mean}, {"min", s.min},   {"q1", s.q1},
            {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
  return j.dump(2);
}

}  // namespace sepsync
