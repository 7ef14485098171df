#pragma once

// Three-message synchronization session with application-layer timestamps,
// comb phases and the NTP baseline.

#include <iosfwd>
#include <optional>
#include <vector>

#include "sepsync/clock.hpp"
#include "sepsync/comb_phase.hpp"
#include "sepsync/link_model.hpp"
#include "sepsync/sep_signal.hpp"

namespace sepsync {

enum class MessageKind { request, reply1, reply2 };

/// Data carried by reply2 (master clock and master comb).
struct Reply2Payload {
  double t2_ms = 0.0;
  double t3_ms = 0.0;
  double phi2_ms = 0.0;
  double phi3_ms = 0.0;
};

/// request and reply1 are empty; only reply2 carries a payload.
struct SyncMessage {
  MessageKind kind = MessageKind::request;
  std::optional<Reply2Payload> payload;

  static SyncMessage request() { return {MessageKind::request, std::nullopt}; }
  static SyncMessage reply1() { return {MessageKind::reply1, std::nullopt}; }
  static SyncMessage reply2(const Reply2Payload& p) { return {MessageKind::reply2, p}; }
};

void validate(const SyncMessage& message, double period_ms);

/// One session. t1, t4 are slave clock; t2, t3 master clock; all in ms.
struct SessionRecord {
  int k = 0;
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
  double phi1 = 0.0, phi2 = 0.0, phi3 = 0.0, phi4 = 0.0;
  double theta_q = 0.0, theta_p = 0.0;
  double rtt = 0.0;
};

/// Folds a phase difference into [0, T): late - early, plus T if negative.
double rounded_phase_diff(double phi_late_ms, double phi_early_ms, double period_ms);

/// Assembles a record from timestamps and phases (computes theta and RTT)
/// and checks its invariants.
SessionRecord make_record(int k, double t1, double t2, double t3, double t4, double phi1,
                          double phi2, double phi3, double phi4, double period_ms);

void validate(const SessionRecord& record, double period_ms);

/// t4 - (t3 + RTT / 2), the symmetric-link estimate.
double ntp_offset(const SessionRecord& record);

struct IntRange {
  int min = 0;
  int max = 0;
};

/// One (i, j) solution of the RTT decomposition with its offset
/// delta = t4 - t3 - theta_p - j * T.
struct Candidate {
  int i = 0;
  int j = 0;
  double delta_ms = 0.0;
};

/// [0, floor((RTT - theta_q - theta_p + match_tol) / T)], the search range
/// used for both i and j when nothing better is known.
IntRange default_ambiguity_range(const SessionRecord& record, double period_ms,
                                 double match_tol_ms);

/// All (i, j) within the ranges whose RTT residual
/// |theta_q + theta_p + (i + j) T - RTT| is at most match_tol, ordered by i.
/// Missing ranges default to default_ambiguity_range. Throws NoCandidates
/// when the set is empty.
std::vector<Candidate> candidate_offsets(const SessionRecord& record, double period_ms,
                                         std::optional<IntRange> i_range,
                                         std::optional<IntRange> j_range,
                                         double match_tol_ms);

/// Same with match_tol = T / 4.
std::vector<Candidate> candidate_offsets(const SessionRecord& record, double period_ms,
                                         std::optional<IntRange> i_range = std::nullopt,
                                         std::optional<IntRange> j_range = std::nullopt);

/// Default-range search that tolerates comb displacements up to
/// wrap_guard_ms. A one-way delay shorter than the displacement makes its
/// integer -1, and then the phase difference lies within wrap_guard_ms of T;
/// only in that window is -1 admitted. wrap_guard_ms = 0 is the plain
/// default-range search.
std::vector<Candidate> guarded_candidate_offsets(const SessionRecord& record, double period_ms,
                                                 double match_tol_ms, double wrap_guard_ms);

/// A simulated node: its clock, its continuously sampled SEP buffer, and the
/// synthesis parameters (kept for ground-truth bookkeeping only).
struct SyncNode {
  NodeClock clock{};
  SepTrace sep_buffer;
  SepSynthesisConfig sep_config{};
};

/// Link behavior of one session, drawn before it runs.
struct SessionDelays {
  double request_ms = 0.0;
  double reply1_ms = 0.0;
  double reply2_ms = 0.0;
  bool request_dropped = false;
  bool reply1_dropped = false;
};

SessionDelays draw_session_delays(const LinkModel& link, Rng& rng);

struct SessionOptions {
  double period_ms = 20.0;          ///< T used to fold phase differences
  double compute_delay_ms = 2.0;    ///< master work between t2 and t3
  double safeguard_ms = 1000.0;     ///< SEP margin on both sides of the timestamps
  double reply_timeout_ms = 1000.0; ///< slave gives up on a dropped exchange
  PipelineConfig pipeline{};
};

/// Simulator-only view of a session; a deployment never sees these.
struct SessionTruth {
  double tau_q_ms = 0.0;   ///< request transit (reference time)
  double tau_p_ms = 0.0;   ///< reply1 transit
  double epsilon_ms = 0.0; ///< slave comb displacement w.r.t. the master comb
  double delta_gt_ms = 0.0;
  int i = 0;
  int j = 0;
};

struct SessionOutcome {
  SessionRecord record;
  SessionTruth truth;
  double end_reference_ms = 0.0;  ///< slave holds reply2 and its own phases
};

/// Runs one session starting at reference time start_reference_ms:
/// request at t1 (slave), delivered at t2 (master), reply1 handed off at t3,
/// delivered at t4. Each node then builds a comb from its own buffer and
/// reads the phases of its two timestamps; reply2 carries the master's.
/// Throws SessionAborted on a dropped request or reply1 and CoverageError
/// when a buffer does not cover the required window.
SessionOutcome run_session(int k, double start_reference_ms, const SyncNode& slave,
                           const SyncNode& master, const SessionDelays& delays,
                           const SessionOptions& options = {});

SessionOutcome run_session(int k, double start_reference_ms, const SyncNode& slave,
                           const SyncNode& master, const LinkModel& link, Rng& rng,
                           const SessionOptions& options = {});

/// Reference time the slave waits before giving up on a dropped exchange.
double aborted_session_end(double start_reference_ms, const SessionOptions& options);

// Session log CSV: k,t1,t2,t3,t4,phi1,phi2,phi3,phi4,thetaq,thetap,rtt (3 decimals).
void write_session_header(std::ostream& out);
void write_session_row(std::ostream& out, const SessionRecord& record);
void write_session_csv(std::ostream& out, const std::vector<SessionRecord>& records);
std::vector<SessionRecord> read_session_csv(std::istream& in);

}  // namespace sepsync
