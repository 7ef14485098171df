// Grid search over PLL gains: output interval spread on +-6 ms jittered
// crossings against comb drift across a 50-crossing outage.

#include <cstdio>
#include <random>
#include <vector>

#include "sepsync/comb_phase.hpp"
#include "sepsync/rng.hpp"

using namespace sepsync;

namespace {

double spread(const DiracComb& comb) {
  double lo = 1e9, hi = -1e9;
  for (std::size_t k = 101; k < comb.impulses_ms.size(); ++k) {
    const double gap = comb.impulses_ms[k] - comb.impulses_ms[k - 1];
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
  }
  return hi - lo;
}

double outage_drift(const PllConfig& cfg, Rng& rng) {
  std::normal_distribution<double> jitter(0.0, 0.2);
  ZcStream z;
  std::vector<double> truth;
  for (int n = 0; n < 1000; ++n) {
    truth.push_back(1000.0 + n * 20.04);
    if (n < 500 || n >= 550) z.crossings_ms.push_back(truth.back() + jitter(rng));
  }
  const DiracComb comb = run_pll(z, cfg);
  double worst = 0.0;
  for (double t : comb.impulses_ms) {
    if (t < truth[500] - 10 || t > truth[550] - 10) continue;
    double d = 1e9;
    for (int n = 495; n < 556; ++n) d = std::min(d, std::abs(t - truth[n]));
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

int main() {
  std::printf("kp,ki,jitter_spread_ms,outage_drift_ms\n");
  for (double kp : {0.02, 0.04, 0.08, 0.12, 0.2}) {
    for (double ki : {0.0005, 0.001, 0.0017, 0.003, 0.006}) {
      PllConfig cfg;
      cfg.proportional_gain = kp;
      cfg.integral_gain = ki;
      Rng rng(derive_seed(1, 0));
      std::uniform_real_distribution<double> u(-6.0, 6.0);
      ZcStream z;
      for (int n = 0; n < 2000; ++n) z.crossings_ms.push_back(1000.0 + n * 20.0 + u(rng));
      std::printf("%.3f,%.4f,%.3f,%.3f\n", kp, ki, spread(run_pll(z, cfg)), outage_drift(cfg, rng));
    }
  }
  return 0;
}
