#pragma once

// Integer ambiguity solver: fuses per-session candidate offsets until a
// single clock offset remains.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepsync/stats.hpp"
#include "sepsync/sync_protocol.hpp"

namespace sepsync {

/// Candidate offsets judged to be the same value across sessions.
struct Cluster {
  std::vector<double> members;
  double representative = 0.0;  ///< running mean of members
};

/// Clusters are matched against new candidates by representative: a new
/// delta belongs to a cluster when it is closer than T/2. Representatives
/// stay at least T/2 apart.
struct SolutionSpace {
  std::vector<Cluster> clusters;
  int sessions_seen = 0;

  bool converged() const { return clusters.size() == 1; }
};

/// Intersects the space with one session's candidate deltas. The first call
/// seeds the clusters; later calls keep a cluster iff some new delta lies
/// within T/2 of its representative, absorbing the closest such delta.
/// Throws EmptySolutionSpace when nothing survives and ConfigError on an
/// empty candidate set.
SolutionSpace intersect(SolutionSpace space, std::span<const double> new_candidates,
                        double period_ms);

struct SolverConfig {
  double period_ms = 20.0;
  std::optional<IntRange> i_bounds;  ///< prior knowledge; nullopt = [0, (RTT-θq-θp)/T]
  std::optional<IntRange> j_bounds;
  int max_sessions = 50;
  std::optional<double> match_tol_ms;  ///< defaults to T/4
  int retry_budget = 3;
  /// Declared bound on |epsilon| for searches without prior bounds; see
  /// guarded_candidate_offsets. Must stay below T/2.
  double wrap_guard_ms = 0.0;

  double match_tol() const { return match_tol_ms.value_or(period_ms / 4.0); }
};

void validate(const SolverConfig& config);

enum class SolveStatus {
  converged,
  max_sessions_reached,     ///< ambiguity never resolved
  retry_budget_exhausted,   ///< too many empty intersections
  source_exhausted,         ///< the session source ran dry first
};

std::string to_string(SolveStatus status);

/// Yields the next session record, or nullopt when no more are available.
using SessionSource = std::function<std::optional<SessionRecord>()>;

struct SolveResult {
  SolveStatus status = SolveStatus::max_sessions_reached;
  double delta_ms = 0.0;   ///< valid when converged
  int sessions = 0;        ///< K: sessions since the last restart
  int total_sessions = 0;  ///< across restarts
  int restarts = 0;
  int rejected_sessions = 0;  ///< sessions without any consistent candidate
  SolutionSpace space;
  std::vector<std::vector<Candidate>> candidates;  ///< per session of the final attempt

  bool converged() const { return status == SolveStatus::converged; }
};

/// Pulls sessions, intersects their candidate sets and stops at a single
/// cluster. An empty intersection restarts the process with fresh state and
/// without the prior bounds (they may have been wrong); restarts are limited
/// by retry_budget and all sessions count toward max_sessions. A session with
/// no consistent candidate is skipped.
SolveResult solve(const SessionSource& source, const SolverConfig& config);

struct StudyConfig {
  int i_max = 10;
  int j_max = 10;
  int trials = 100000;
  std::uint64_t seed = 1;
  double period_ms = 20.0;
  bool prior_knowledge = false;  ///< search [0, i_max] x [0, j_max] instead of the RTT range
  int max_sessions = 1000;
  unsigned threads = 0;
};

void validate(const StudyConfig& config);

struct StudyTrial {
  int trial = 0;
  int k = 0;
  bool converged = false;
  double delta_error_ms = 0.0;
};

struct StudyResult {
  StudyConfig config;
  std::vector<StudyTrial> trials;
  Summary k_summary;  ///< over converged trials
  double convergence_rate = 0.0;
};

/// Monte Carlo over synchronization processes with epsilon = 0: each session
/// draws i, j, theta_q, theta_p uniformly, builds a consistent record and
/// feeds the solver.
StudyResult convergence_study(const StudyConfig& config);

// `trial,K,converged,delta_error_ms`
void write_study_csv(std::ostream& out, const StudyResult& result);
/// JSON summary block.
std::string study_summary_json(const StudyResult& result);

}  // namespace sepsync
