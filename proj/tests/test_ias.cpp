#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "sepsync/error.hpp"
#include "sepsync/ias.hpp"

using namespace sepsync;

namespace {

constexpr double kT = 20.0;

SessionSource from(std::vector<SessionRecord> records) {
  auto next = std::make_shared<std::size_t>(0);
  auto data = std::make_shared<std::vector<SessionRecord>>(std::move(records));
  return [next, data]() -> std::optional<SessionRecord> {
    if (*next >= data->size()) return std::nullopt;
    return (*data)[(*next)++];
  };
}

std::vector<SessionRecord> worked_example() {
  return {make_record(1, 1055, 1000, 1005, 1135, 10, 0, 5, 10, kT),
          make_record(2, 2078, 2000, 2004, 2160, 13, 0, 4, 15, kT)};
}

SolverConfig bounded(int lo, int hi) {
  SolverConfig c;
  c.i_bounds = IntRange{lo, hi};
  c.j_bounds = IntRange{lo, hi};
  return c;
}

// Session with one-way delays tau_q, tau_p and comb displacement eps, built
// directly from the folding relations.
SessionRecord synthetic(int k, double tau_q, double tau_p, double eps, double delta,
                        double phi1) {
  const double t1 = 1000.0 * k;
  const double t2 = t1 - delta + tau_q;
  const double t3 = t2 + 2.0;
  const double t4 = t3 + delta + tau_p;
  const double phi2 = oracle::fold(phi1 + tau_q + eps, kT).theta;
  const double phi3 = oracle::fold(phi2 + 2.0, kT).theta;
  const double phi4 = oracle::fold(phi3 + tau_p - eps, kT).theta;
  return make_record(k, t1, t2, t3, t4, phi1, phi2, phi3, phi4, kT);
}

std::vector<double> reps(const SolutionSpace& s) {
  std::vector<double> out;
  for (const auto& c : s.clusters) out.push_back(c.representative);
  return out;
}

}  // namespace

TEST(Intersect, WorkedExample) {
  const std::vector<double> a = {85.0, 105.0};
  const std::vector<double> b = {105.0, 125.0};
  SolutionSpace s = intersect({}, a, kT);
  EXPECT_EQ(reps(s), a);
  s = intersect(s, b, kT);
  ASSERT_TRUE(s.converged());
  EXPECT_DOUBLE_EQ(s.clusters[0].representative, 105.0);
  EXPECT_EQ(s.sessions_seen, 2);
}

TEST(Intersect, RepresentativeIsRunningMean) {
  const std::vector<double> a = {105.0};
  const std::vector<double> b = {104.2};
  const SolutionSpace s = intersect(intersect({}, a, kT), b, kT);
  ASSERT_EQ(s.clusters.size(), 1u);
  EXPECT_NEAR(s.clusters[0].representative, 104.6, 1e-12);
  EXPECT_EQ(s.clusters[0].members.size(), 2u);
}

TEST(Intersect, IdenticalSetsStayAmbiguous) {
  const std::vector<double> a = {40.0, 60.0, 80.0};
  SolutionSpace s = intersect({}, a, kT);
  for (int n = 0; n < 5; ++n) s = intersect(s, a, kT);
  EXPECT_EQ(s.clusters.size(), 3u);
  EXPECT_FALSE(s.converged());
}

TEST(Intersect, EmptyResultAndEmptyInput) {
  const std::vector<double> a = {85.0, 105.0};
  const std::vector<double> far = {95.0, 115.0};
  EXPECT_THROW(intersect(intersect({}, a, kT), far, kT), EmptySolutionSpace);
  EXPECT_THROW(intersect({}, std::vector<double>{}, kT), ConfigError);
}

TEST(Intersect, NeverGrowsAndKeepsSeparation) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::uniform_int_distribution<int> shift(-3, 3);
  for (int trial = 0; trial < 500; ++trial) {
    const double truth = 17.5;
    SolutionSpace s;
    std::size_t previous = 0;
    for (int session = 0; session < 8; ++session) {
      std::vector<double> c = {truth + jitter(rng)};
      for (int n = count(rng); n > 0; --n) {
        const int m = shift(rng);
        if (m != 0) c.push_back(truth + m * kT + jitter(rng));
      }
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end(),
                          [](double x, double y) { return std::abs(x - y) < kT / 2; }),
              c.end());
      s = intersect(std::move(s), c, kT);
      if (session > 0) EXPECT_LE(s.clusters.size(), previous);
      previous = s.clusters.size();
      const auto r = reps(s);
      for (std::size_t x = 0; x < r.size(); ++x) {
        for (std::size_t y = x + 1; y < r.size(); ++y) EXPECT_GE(std::abs(r[x] - r[y]), kT / 2);
      }
      bool truth_kept = false;
      for (double v : r) truth_kept |= std::abs(v - truth) < 0.31;
      EXPECT_TRUE(truth_kept);
    }
  }
}

TEST(Solve, WorkedExampleWithBounds) {
  const SolveResult r = solve(from(worked_example()), bounded(1, 4));
  ASSERT_TRUE(r.converged());
  EXPECT_DOUBLE_EQ(r.delta_ms, 105.0);
  EXPECT_EQ(r.sessions, 2);
  ASSERT_EQ(r.candidates.size(), 2u);
  EXPECT_EQ(r.candidates[0].size(), 2u);
}

TEST(Solve, WorkedExampleWithoutBoundsStaysAmbiguous) {
  const SolveResult r = solve(from(worked_example()), SolverConfig{});
  EXPECT_EQ(r.status, SolveStatus::source_exhausted);
  EXPECT_EQ(reps(r.space), (std::vector<double>{85.0, 105.0, 125.0}));
}

TEST(Solve, SingleCandidateConvergesAtOnce) {
  const SolveResult r = solve(from({synthetic(1, 6.0, 9.0, 0.0, 42.0, 3.0)}), SolverConfig{});
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.sessions, 1);
  EXPECT_NEAR(r.delta_ms, 42.0, 1e-9);
}

TEST(Solve, UnvaryingSessionsHitMaxSessions) {
  std::vector<SessionRecord> same;
  for (int k = 1; k <= 100; ++k) same.push_back(synthetic(k, 45.0, 45.0, 0.0, 0.0, 1.0));
  SolverConfig c;
  c.max_sessions = 30;
  const SolveResult r = solve(from(same), c);
  EXPECT_EQ(r.status, SolveStatus::max_sessions_reached);
  EXPECT_EQ(r.total_sessions, 30);
}

TEST(Solve, EmptyIntersectionRestartsWithoutPriors) {
  auto recs = worked_example();
  recs.insert(recs.begin() + 1, make_record(3, 3065, 3000, 3005, 3145, 0, 10, 0, 5, kT));
  const SolveResult r = solve(from(recs), bounded(1, 4));
  EXPECT_EQ(r.restarts, 1);
  EXPECT_EQ(r.total_sessions, 3);
  ASSERT_EQ(r.candidates.size(), 1u);
  // RTT range for the surviving session is [0, 3].
  EXPECT_EQ(r.candidates[0].size(), 4u);
}

TEST(Solve, RetryBudgetIsFinite) {
  std::vector<SessionRecord> recs;
  for (int n = 0; n < 20; ++n) {
    recs.push_back(worked_example()[0]);
    recs.push_back(make_record(3, 3065, 3000, 3005, 3145, 0, 10, 0, 5, kT));
  }
  SolverConfig c = bounded(1, 4);
  c.retry_budget = 2;
  const SolveResult r = solve(from(recs), c);
  EXPECT_EQ(r.status, SolveStatus::retry_budget_exhausted);
  EXPECT_EQ(r.restarts, 2);
}

TEST(Solve, SessionsWithoutCandidatesAreSkipped) {
  auto recs = worked_example();
  recs.insert(recs.begin(), synthetic(9, 150.0, 150.0, 0.0, 0.0, 1.0));
  const SolveResult r = solve(from(recs), bounded(1, 4));
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.rejected_sessions, 1);
  EXPECT_DOUBLE_EQ(r.delta_ms, 105.0);
}

TEST(Solve, ConfigValidation) {
  SolverConfig c;
  c.period_ms = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = SolverConfig{};
  c.wrap_guard_ms = 10.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = SolverConfig{};
  c.max_sessions = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = bounded(3, 1);
  EXPECT_THROW(validate(c), ConfigError);
}

// Soundness on random processes, and prior bounds never slow convergence.
TEST(Solve, SoundAndPriorNeverSlower) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> periods(0, 6);
  std::uniform_real_distribution<double> theta(0.0, kT);
  std::uniform_real_distribution<double> offset(-500.0, 500.0);
  for (int trial = 0; trial < 400; ++trial) {
    const double delta = std::round(offset(rng) * 1000.0) / 1000.0;
    std::vector<SessionRecord> recs;
    for (int k = 1; k <= 200; ++k) {
      const double tq = periods(rng) * kT + std::round(theta(rng) * 1000) / 1000;
      const double tp = periods(rng) * kT + std::round(theta(rng) * 1000) / 1000;
      recs.push_back(synthetic(k, std::max(tq, 0.01), std::max(tp, 0.01), 0.0, delta,
                               std::round(theta(rng) * 1000) / 1000));
    }
    SolverConfig plain;
    plain.max_sessions = 200;
    SolverConfig prior = bounded(0, 6);
    prior.max_sessions = 200;
    const SolveResult a = solve(from(recs), plain);
    const SolveResult b = solve(from(recs), prior);
    ASSERT_TRUE(a.converged()) << trial;
    ASSERT_TRUE(b.converged()) << trial;
    EXPECT_NEAR(a.delta_ms, delta, 0.01);
    EXPECT_NEAR(b.delta_ms, delta, 0.01);
    EXPECT_LE(b.sessions, a.sessions);
  }
}

// With a declared displacement bound, the guarded search never settles on a
// neighbor of the true offset, even when a transit is shorter than |eps|.
TEST(Solve, WrapGuardIsSound) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> eps_d(-6.0, 6.0);
  std::uniform_real_distribution<double> q_d(1.0, 80.0);
  std::uniform_real_distribution<double> p_d(1.0, 14.0);
  std::uniform_real_distribution<double> phase(0.0, kT);
  int wrong_unguarded = 0, converged_guarded = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const double eps = eps_d(rng);
    std::vector<SessionRecord> recs;
    for (int k = 1; k <= 100; ++k) recs.push_back(synthetic(k, q_d(rng), p_d(rng), eps, 0.0, phase(rng)));
    SolverConfig guarded;
    guarded.wrap_guard_ms = 7.0;
    guarded.max_sessions = 100;
    const SolveResult g = solve(from(recs), guarded);
    if (g.converged()) {
      ++converged_guarded;
      EXPECT_NEAR(g.delta_ms, eps, 0.01) << trial;
    }
    SolverConfig plain;
    plain.max_sessions = 100;
    const SolveResult u = solve(from(recs), plain);
    if (u.converged() && std::abs(u.delta_ms - eps) > 1.0) ++wrong_unguarded;
  }
  EXPECT_GT(converged_guarded, 150);
  EXPECT_GT(wrong_unguarded, 0);
}

TEST(Study, NoAmbiguityConvergesInOneSession) {
  StudyConfig c;
  c.i_max = 0;
  c.j_max = 0;
  c.trials = 1000;
  const StudyResult r = convergence_study(c);
  EXPECT_DOUBLE_EQ(r.convergence_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.k_summary.mean, 1.0);
  EXPECT_DOUBLE_EQ(r.k_summary.max, 1.0);
}

TEST(Study, SmallAmbiguityIsResolvedQuickly) {
  StudyConfig c;
  c.i_max = 1;
  c.j_max = 1;
  c.trials = 10000;
  const StudyResult r = convergence_study(c);
  EXPECT_DOUBLE_EQ(r.convergence_rate, 1.0);
  EXPECT_GE(r.k_summary.mean, 1.0);
  EXPECT_LE(r.k_summary.mean, 4.0);
  for (const auto& t : r.trials) EXPECT_NEAR(t.delta_error_ms, 0.0, 1e-6);
}

TEST(Study, MeanKGrowsWithAmbiguity) {
  double last = 0.0;
  for (int m : {1, 3, 6, 10}) {
    StudyConfig c;
    c.i_max = m;
    c.j_max = m;
    c.trials = 3000;
    const double mean = convergence_study(c).k_summary.mean;
    EXPECT_GT(mean, last) << m;
    last = mean;
  }
}

TEST(Study, IndependentOfThreadCount) {
  StudyConfig c;
  c.trials = 2000;
  c.threads = 1;
  const StudyResult a = convergence_study(c);
  c.threads = 4;
  const StudyResult b = convergence_study(c);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t n = 0; n < a.trials.size(); ++n) {
    EXPECT_EQ(a.trials[n].k, b.trials[n].k);
    EXPECT_EQ(a.trials[n].delta_error_ms, b.trials[n].delta_error_ms);
  }
  std::ostringstream x, y;
  write_study_csv(x, a);
  write_study_csv(y, b);
  EXPECT_EQ(x.str(), y.str());
}

TEST(Study, SummaryJson) {
  StudyConfig c;
  c.trials = 200;
  const auto j = nlohmann::json::parse(study_summary_json(convergence_study(c)));
  EXPECT_EQ(j["trials"], 200);
  EXPECT_TRUE(j["K"].contains("median"));
  EXPECT_LE(j["K"]["q1"].get<double>(), j["K"]["q3"].get<double>());
}

TEST(Study, Validation) {
  StudyConfig c;
  c.trials = 0;
  EXPECT_THROW(convergence_study(c), ConfigError);
  c = StudyConfig{};
  c.i_max = -1;
  EXPECT_THROW(convergence_study(c), ConfigError);
}
