#include "sepsync/sync_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "sepsync/error.hpp"

namespace sepsync {
namespace {

constexpr double kPhaseSlack = 1.1;

void check_period(double period_ms) {
  if (!(period_ms > 0.0) || !std::isfinite(period_ms)) {
    throw ConfigError("comb period must be positive");
  }
}

void check_phase(double phi, double period_ms, const char* name) {
  if (!(phi >= 0.0 && phi < kPhaseSlack * period_ms)) {
    std::ostringstream msg;
    msg << name << " = " << phi << " ms outside [0, 1.1 T)";
    throw ConfigError(msg.str());
  }
}

void check_range(const IntRange& r, const char* name) {
  if (r.min < 0 || r.max < r.min) {
    throw ConfigError(std::string(name) + " range must be non-empty with non-negative bounds");
  }
}

}  // namespace

void validate(const SyncMessage& message, double period_ms) {
  if (message.kind != MessageKind::reply2) {
    if (message.payload) throw ConfigError("request and reply1 carry no payload");
    return;
  }
  if (!message.payload) throw ConfigError("reply2 must carry t2, t3, phi2, phi3");
  const auto& p = *message.payload;
  if (p.t3_ms < p.t2_ms) throw ConfigError("reply2 has t3 < t2");
  check_phase(p.phi2_ms, period_ms, "phi2");
  check_phase(p.phi3_ms, period_ms, "phi3");
}

double rounded_phase_diff(double phi_late_ms, double phi_early_ms, double period_ms) {
  double theta = phi_late_ms - phi_early_ms;
  if (theta < 0.0) theta += period_ms;
  // Phases may exceed T by up to 10% when the comb period runs long.
  if (theta >= period_ms) theta -= period_ms;
  return std::max(theta, 0.0);
}

SessionRecord make_record(int k, double t1, double t2, double t3, double t4, double phi1,
                          double phi2, double phi3, double phi4, double period_ms) {
  SessionRecord r;
  r.k = k;
  r.t1 = t1;
  r.t2 = t2;
  r.t3 = t3;
  r.t4 = t4;
  r.phi1 = phi1;
  r.phi2 = phi2;
  r.phi3 = phi3;
  r.phi4 = phi4;
  r.theta_q = rounded_phase_diff(phi2, phi1, period_ms);
  r.theta_p = rounded_phase_diff(phi4, phi3, period_ms);
  r.rtt = (t4 - t1) - (t3 - t2);
  validate(r, period_ms);
  return r;
}

void validate(const SessionRecord& r, double period_ms) {
  check_period(period_ms);
  if (!(r.t4 > r.t1)) throw ConfigError("session record needs t4 > t1");
  if (!(r.t3 >= r.t2)) throw ConfigError("session record needs t3 >= t2");
  if (!(r.rtt > 0.0)) throw ConfigError("session record needs a positive RTT");
  check_phase(r.phi1, period_ms, "phi1");
  check_phase(r.phi2, period_ms, "phi2");
  check_phase(r.phi3, period_ms, "phi3");
  check_phase(r.phi4, period_ms, "phi4");
  if (!(r.theta_q >= 0.0 && r.theta_q < period_ms) ||
      !(r.theta_p >= 0.0 && r.theta_p < period_ms)) {
    throw ConfigError("rounded phase differences must lie in [0, T)");
  }
}

double ntp_offset(const SessionRecord& r) { return r.t4 - (r.t3 + r.rtt / 2.0); }

IntRange default_ambiguity_range(const SessionRecord& r, double period_ms,
                                 double match_tol_ms) {
  check_period(period_ms);
  const double span = (r.rtt - r.theta_q - r.theta_p + match_tol_ms) / period_ms;
  return {0, span < 0.0 ? -1 : static_cast<int>(std::floor(span))};
}

std::vector<Candidate> candidate_offsets(const SessionRecord& r, double period_ms,
                                         std::optional<IntRange> i_range,
                                         std::optional<IntRange> j_range,
                                         double match_tol_ms) {
  check_period(period_ms);
  if (!(match_tol_ms > 0.0 && match_tol_ms < period_ms / 2.0)) {
    throw ConfigError("match tolerance must be in (0, T/2)");
  }
  const IntRange fallback = default_ambiguity_range(r, period_ms, match_tol_ms);
  if (fallback.max < 0 && (!i_range || !j_range)) {
    throw NoCandidates("RTT is shorter than the rounded phase differences");
  }
  const IntRange ir = i_range.value_or(fallback);
  const IntRange jr = j_range.value_or(fallback);
  check_range(ir, "i");
  check_range(jr, "j");

  // Tolerance below T/2 admits at most one j per i.
  const double periods = (r.rtt - r.theta_q - r.theta_p) / period_ms;
  std::vector<Candidate> out;
  for (int i = ir.min; i <= ir.max; ++i) {
    const auto j = static_cast<int>(std::lround(periods - i));
    if (j < jr.min || j > jr.max) continue;
    const double residual = r.theta_q + r.theta_p + (i + j) * period_ms - r.rtt;
    if (std::abs(residual) > match_tol_ms) continue;
    out.push_back({i, j, r.t4 - r.t3 - r.theta_p - j * period_ms});
  }
  if (out.empty()) {
    std::ostringstream msg;
    msg << "no (i, j) in [" << ir.min << ", " << ir.max << "] x [" << jr.min << ", " << jr.max
        << "] matches RTT " << r.rtt << " ms";
    throw NoCandidates(msg.str());
  }
  return out;
}

std::vector<Candidate> candidate_offsets(const SessionRecord& record, double period_ms,
                                         std::optional<IntRange> i_range,
                                         std::optional<IntRange> j_range) {
  return candidate_offsets(record, period_ms, i_range, j_range, period_ms / 4.0);
}

std::vector<Candidate> guarded_candidate_offsets(const SessionRecord& r, double period_ms,
                                                 double match_tol_ms, double wrap_guard_ms) {
  check_period(period_ms);
  if (!(match_tol_ms > 0.0 && match_tol_ms < period_ms / 2.0)) {
    throw ConfigError("match tolerance must be in (0, T/2)");
  }
  if (!(wrap_guard_ms >= 0.0 && wrap_guard_ms < period_ms / 2.0)) {
    throw ConfigError("wrap guard must be in [0, T/2)");
  }
  const auto lowest = [&](double theta) {
    return wrap_guard_ms > 0.0 && theta >= period_ms - wrap_guard_ms ? -1 : 0;
  };
  const int i_lo = lowest(r.theta_q);
  const int j_lo = lowest(r.theta_p);
  const double periods = (r.rtt - r.theta_q - r.theta_p) / period_ms;
  const int i_hi = static_cast<int>(std::floor(periods + match_tol_ms / period_ms)) - j_lo;

  std::vector<Candidate> out;
  for (int i = i_lo; i <= i_hi; ++i) {
    const auto j = static_cast<int>(std::lround(periods - i));
    if (j < j_lo) continue;
    const double residual = r.theta_q + r.theta_p + (i + j) * period_ms - r.rtt;
    if (std::abs(residual) > match_tol_ms) continue;
    out.push_back({i, j, r.t4 - r.t3 - r.theta_p - j * period_ms});
  }
  if (out.empty()) {
    std::ostringstream msg;
    msg << "no (i, j) matches RTT " << r.rtt << " ms";
    throw NoCandidates(msg.str());
  }
  return out;
}

SessionDelays draw_session_delays(const LinkModel& link, Rng& rng) {
  SessionDelays d;
  d.request_ms = draw_delay(link, Direction::slave_to_master, rng);
  d.reply1_ms = draw_delay(link, Direction::master_to_slave, rng);
  d.reply2_ms = draw_delay(link, Direction::master_to_slave, rng);
  d.request_dropped = draw_drop(link, rng);
  d.reply1_dropped = draw_drop(link, rng);
  return d;
}

SessionOutcome run_session(int k, double start_reference_ms, const SyncNode& slave,
                           const SyncNode& master, const SessionDelays& delays,
                           const SessionOptions& options) {
  if (delays.request_dropped) throw SessionAborted("request dropped by the link");
  if (delays.reply1_dropped) throw SessionAborted("reply1 dropped by the link");
  const double T = options.period_ms;

  // Slave: start_sync_session() -> t1, send request.
  const double r1 = start_reference_ms;
  const double t1 = round_timestamp(slave.clock.read(r1));
  // Master: request received -> t2, compute, t3, send reply1.
  const double r2 = r1 + delays.request_ms;
  const double t2 = round_timestamp(master.clock.read(r2));
  const double r3 = r2 + options.compute_delay_ms;
  const double t3 = round_timestamp(master.clock.read(r3));
  // Slave: reply1 received -> t4.
  const double r4 = r3 + delays.reply1_ms;
  const double t4 = round_timestamp(slave.clock.read(r4));

  // Master, once SEP covering t3 + safeguard is buffered: phases, reply2.
  const DiracComb master_comb =
      build_comb(master.sep_buffer, t2, t3, options.safeguard_ms, options.pipeline);
  const SyncMessage reply2 = SyncMessage::reply2(
      {t2, t3, phase_of(master_comb, t2), phase_of(master_comb, t3)});
  validate(reply2, T);

  // Slave, once SEP covering t4 + safeguard is buffered: own phases.
  const DiracComb slave_comb =
      build_comb(slave.sep_buffer, t1, t4, options.safeguard_ms, options.pipeline);
  const double phi1 = phase_of(slave_comb, t1);
  const double phi4 = phase_of(slave_comb, t4);

  const auto& p = *reply2.payload;
  SessionOutcome out;
  out.record = make_record(k, t1, p.t2_ms, p.t3_ms, t4, phi1, p.phi2_ms, p.phi3_ms, phi4, T);

  SessionTruth& truth = out.truth;
  truth.tau_q_ms = r2 - r1;
  truth.tau_p_ms = r4 - r3;
  truth.epsilon_ms =
      carrier_delay_ms(slave.sep_config, r1) - carrier_delay_ms(master.sep_config, r1);
  truth.delta_gt_ms = true_offset(slave.clock, master.clock, r1);
  truth.i = static_cast<int>(
      std::lround((truth.tau_q_ms - out.record.theta_q + truth.epsilon_ms) / T));
  truth.j = static_cast<int>(
      std::lround((truth.tau_p_ms - out.record.theta_p - truth.epsilon_ms) / T));

  const double reply2_arrival = r3 + options.safeguard_ms + delays.reply2_ms;
  out.end_reference_ms = std::max(r4 + options.safeguard_ms, reply2_arrival);
  return out;
}

SessionOutcome run_session(int k, double start_reference_ms, const SyncNode& slave,
                           const SyncNode& master, const LinkModel& link, Rng& rng,
                           const SessionOptions& options) {
  return run_session(k, start_reference_ms, slave, master, draw_session_delays(link, rng),
                     options);
}

double aborted_session_end(double start_reference_ms, const SessionOptions& options) {
  return start_reference_ms + options.reply_timeout_ms;
}

void write_session_header(std::ostream& out) {
  out << "k,t1,t2,t3,t4,phi1,phi2,phi3,phi4,thetaq,thetap,rtt\n";
}

void write_session_row(std::ostream& out, const SessionRecord& r) {
  out << r.k << std::fixed << std::setprecision(3) << ',' << r.t1 << ',' << r.t2 << ','
      << r.t3 << ',' << r.t4 << ',' << r.phi1 << ',' << r.phi2 << ',' << r.phi3 << ','
      << r.phi4 << ',' << r.theta_q << ',' << r.theta_p << ',' << r.rtt << '\n';
}

void write_session_csv(std::ostream& out, const std::vector<SessionRecord>& records) {
  write_session_header(out);
  for (const auto& r : records) write_session_row(out, r);
}

std::vector<SessionRecord> read_session_csv(std::istream& in) {
  const auto rows = csv::read_numeric(in, {"k", "t1", "t2", "t3", "t4", "phi1", "phi2", "phi3",
                                           "phi4", "thetaq", "thetap", "rtt"});
  std::vector<SessionRecord> records;
  records.reserve(rows.size());
  for (const auto& v : rows) {
    if (v[0] != std::floor(v[0])) throw FormatError("session index k must be an integer");
    SessionRecord r;
    r.k = static_cast<int>(v[0]);
    r.t1 = v[1];
    r.t2 = v[2];
    r.t3 = v[3];
    r.t4 = v[4];
    r.phi1 = v[5];
    r.phi2 = v[6];
    r.phi3 = v[7];
    r.phi4 = v[8];
    r.theta_q = v[9];
    r.theta_p = v[10];
    r.rtt = v[11];
    records.push_back(r);
  }
  return records;
}

}  // namespace sepsync
