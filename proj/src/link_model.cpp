#include "sepsync/link_model.hpp"

#include <cmath>
#include <random>

#include "sepsync/error.hpp"

namespace sepsync {

double DelayModel::base_median() const {
  switch (shape) {
    case DelayShape::constant:
    case DelayShape::log_normal:
      return median_ms;
    case DelayShape::uniform_interval:
      return interval_ms / 2.0 + overhead_ms;
  }
  return median_ms;
}

void validate(const DelayModel& m) {
  switch (m.shape) {
    case DelayShape::constant:
      if (!(m.median_ms > 0.0)) throw ConfigError("constant delay must be positive");
      break;
    case DelayShape::uniform_interval:
      if (!(m.interval_ms >= 0.0) || !(m.overhead_ms > 0.0)) {
        throw ConfigError("uniform delay needs interval >= 0 and overhead > 0");
      }
      break;
    case DelayShape::log_normal:
      if (!(m.median_ms > 0.0) || !(m.sigma >= 0.0)) {
        throw ConfigError("log-normal delay needs median > 0 and sigma >= 0");
      }
      break;
  }
  if (!(m.tail_probability >= 0.0 && m.tail_probability <= 1.0)) {
    throw ConfigError("tail probability must be in [0, 1]");
  }
  if (m.tail_probability > 0.0 && !(m.tail_max_ms > 0.0)) {
    throw ConfigError("tail magnitude must be positive");
  }
}

void validate(const LinkModel& link) {
  validate(link.slave_to_master);
  validate(link.master_to_slave);
  if (!(link.drop_probability >= 0.0 && link.drop_probability < 1.0)) {
    throw ConfigError("drop probability must be in [0, 1)");
  }
}

double draw_delay(const LinkModel& link, Direction direction, Rng& rng) {
  const DelayModel& m = link.model(direction);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double delay = m.median_ms;
  switch (m.shape) {
    case DelayShape::constant:
      break;
    case DelayShape::uniform_interval:
      delay = m.overhead_ms + m.interval_ms * unit(rng);
      break;
    case DelayShape::log_normal: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      delay = m.median_ms * std::exp(m.sigma * gauss(rng));
      break;
    }
  }
  // Tail draws are consumed only for models that have a tail, so constant
  // links leave the stream untouched.
  if (m.tail_probability > 0.0 && unit(rng) < m.tail_probability && m.tail_max_ms > delay) {
    delay += (m.tail_max_ms - delay) * unit(rng);
  }
  return delay;
}

bool draw_drop(const LinkModel& link, Rng& rng) {
  if (link.drop_probability <= 0.0) return false;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng) < link.drop_probability;
}

LinkModel ble_preset() {
  LinkModel link;
  link.name = "ble";
  link.slave_to_master = {.shape = DelayShape::uniform_interval,
                          .median_ms = 41.75,
                          .interval_ms = 67.5,
                          .overhead_ms = 8.0,
                          .tail_probability = 0.01,
                          .tail_max_ms = 376.0};
  link.master_to_slave = {.shape = DelayShape::log_normal,
                          .median_ms = 8.0,
                          .sigma = 0.15,
                          .tail_probability = 0.01,
                          .tail_max_ms = 153.0};
  return link;
}

LinkModel internet_preset() {
  LinkModel link;
  link.name = "internet";
  link.slave_to_master = {.shape = DelayShape::log_normal,
                          .median_ms = 60.0,
                          .sigma = 0.25,
                          .tail_probability = 0.10,
                          .tail_max_ms = 400.0};
  link.master_to_slave = {.shape = DelayShape::log_normal,
                          .median_ms = 45.0,
                          .sigma = 0.25,
                          .tail_probability = 0.10,
                          .tail_max_ms = 400.0};
  return link;
}

LinkModel constant_preset(double slave_to_master_ms, double master_to_slave_ms) {
  LinkModel link;
  link.name = "constant";
  link.slave_to_master = {.shape = DelayShape::constant, .median_ms = slave_to_master_ms};
  link.master_to_slave = {.shape = DelayShape::constant, .median_ms = master_to_slave_ms};
  return link;
}

LinkModel preset_by_name(const std::string& name) {
  if (name == "ble") return ble_preset();
  if (name == "internet") return internet_preset();
  if (name == "constant") return constant_preset(10.0, 10.0);
  throw ConfigError("unknown link preset '" + name + "' (expected ble, internet or constant)");
}

}  // namespace sepsync
