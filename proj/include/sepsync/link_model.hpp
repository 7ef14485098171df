#pragma once

// Stochastic one-way delay models for simulated links.

#include <cstdint>
#include <string>

#include "sepsync/rng.hpp"

namespace sepsync {

enum class DelayShape {
  constant,          ///< always median_ms
  uniform_interval,  ///< uniform(0, interval_ms) + overhead_ms (connection-interval polling)
  log_normal,        ///< median_ms * exp(sigma * N(0, 1))
};

/// One direction of a link. With probability tail_probability a draw is
/// replaced by uniform(base draw, tail_max_ms).
struct DelayModel {
  DelayShape shape = DelayShape::constant;
  double median_ms = 10.0;
  double interval_ms = 0.0;
  double overhead_ms = 0.0;
  double sigma = 0.0;
  double tail_probability = 0.0;
  double tail_max_ms = 0.0;

  /// Median of the base distribution (before tails).
  double base_median() const;
};

enum class Direction { slave_to_master, master_to_slave };

struct LinkModel {
  std::string name = "constant";
  DelayModel slave_to_master{};
  DelayModel master_to_slave{};
  double drop_probability = 0.0;
  std::uint64_t rng_seed = 1;

  const DelayModel& model(Direction d) const {
    return d == Direction::slave_to_master ? slave_to_master : master_to_slave;
  }
};

void validate(const DelayModel& model);
void validate(const LinkModel& link);

/// Positive one-way delay in ms.
double draw_delay(const LinkModel& link, Direction direction, Rng& rng);

/// Bernoulli(drop_probability).
bool draw_drop(const LinkModel& link, Rng& rng);

/// BLE with BlueZ defaults: slave->master waits uniformly over a 67.5 ms
/// connection interval plus 8 ms of send/receive overhead, 1% tail to 376 ms;
/// master->slave is log-normal around 8 ms with a 1% tail to 153 ms.
LinkModel ble_preset();

/// Wide-area tunnel: log-normal 60 ms / 45 ms medians, 10% tails to 400 ms.
LinkModel internet_preset();

/// Deterministic link with fixed delays.
LinkModel constant_preset(double slave_to_master_ms, double master_to_slave_ms);

/// "ble", "internet" or "constant" (10 ms both ways). Throws ConfigError.
LinkModel preset_by_name(const std::string& name);

}  // namespace sepsync
