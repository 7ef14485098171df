#pragma once

#include <cmath>

namespace sepsync {

/// Maximum supported oscillator rate error.
inline constexpr double kMaxDriftPpm = 100.0;

/// Resolution of application-layer timestamps (ms).
inline constexpr double kTimestampResolutionMs = 0.001;

/// Local clock of a node, as a function of simulation reference time:
/// local = reference * (1 + drift_ppm * 1e-6) + offset_ms.
struct NodeClock {
  double offset_ms = 0.0;
  double drift_ppm = 0.0;

  double rate() const { return 1.0 + drift_ppm * 1e-6; }
  double read(double reference_ms) const { return reference_ms * rate() + offset_ms; }
  double reference_of(double local_ms) const { return (local_ms - offset_ms) / rate(); }
};

void validate(const NodeClock& clock);

/// Ground-truth offset (slave minus master) at a reference instant.
inline double true_offset(const NodeClock& slave, const NodeClock& master,
                          double reference_ms) {
  return slave.read(reference_ms) - master.read(reference_ms);
}

inline double round_timestamp(double ms) {
  return std::round(ms / kTimestampResolutionMs) * kTimestampResolutionMs;
}

}  // namespace sepsync
