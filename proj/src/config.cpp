#include "sepsync/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sepsync/error.hpp"

namespace sepsync {
namespace {

namespace pt = boost::property_tree;

// Typed access to an INI tree that remembers which keys were read, so the
// leftovers can be reported as unknown.
class IniReader {
 public:
  explicit IniReader(std::istream& in) {
    try {
      pt::ini_parser::read_ini(in, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("malformed config: " + std::string(e.what()));
    }
    const auto version = text("", "format_version");
    if (!version) throw ConfigError("config is missing format_version");
    if (*version != std::to_string(kConfigFormatVersion)) {
      throw ConfigError("unsupported format_version " + *version + " (expected " +
                        std::to_string(kConfigFormatVersion) + ")");
    }
  }

  std::optional<std::string> text(const std::string& section, const std::string& key) {
    const pt::ptree* node = &tree_;
    if (!section.empty()) {
      const auto s = tree_.find(section);
      if (s == tree_.not_found()) return std::nullopt;
      node = &s->second;
    }
    const auto v = node->find(key);
    if (v == node->not_found()) return std::nullopt;
    used_.insert(section + "/" + key);
    return v->second.data();
  }

  template <typename T>
  void read(const std::string& section, const std::string& key, T& target) {
    const auto raw = text(section, key);
    if (!raw) return;
    target = convert<T>(*raw, section, key);
  }

  template <typename T>
  void read(const std::string& section, const std::string& key, std::optional<T>& target) {
    const auto raw = text(section, key);
    if (!raw) return;
    target = convert<T>(*raw, section, key);
  }

  void reject_unknown() const {
    for (const auto& [name, child] : tree_) {
      if (child.empty()) {
        check("", name);
        continue;
      }
      for (const auto& [key, value] : child) check(name, key);
    }
  }

 private:
  void check(const std::string& section, const std::string& key) const {
    if (!used_.contains(section + "/" + key)) {
      throw ConfigError("unknown config key '" + (section.empty() ? "" : section + ".") + key +
                        "'");
    }
  }

  template <typename T>
  static T convert(const std::string& raw, const std::string& section, const std::string& key) {
    const std::string where = section.empty() ? key : section + "." + key;
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw ConfigError(where + ": expected true or false, got '" + raw + "'");
    } else {
      std::istringstream in(raw);
      T value{};
      in >> value;
      if (!in || !(in >> std::ws).eof()) {
        throw ConfigError(where + ": cannot parse '" + raw + "'");
      }
      return value;
    }
  }

  pt::ptree tree_;
  std::set<std::string> used_;
};

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return in;
}

DelayShape shape_from_string(const std::string& s) {
  if (s == "constant") return DelayShape::constant;
  if (s == "uniform_interval") return DelayShape::uniform_interval;
  if (s == "log_normal") return DelayShape::log_normal;
  throw ConfigError("unknown delay shape '" + s + "'");
}

void read_delay(IniReader& r, const std::string& prefix, DelayModel& m) {
  if (const auto shape = r.text("link", prefix + "_shape")) m.shape = shape_from_string(*shape);
  r.read("link", prefix + "_median_ms", m.median_ms);
  r.read("link", prefix + "_interval_ms", m.interval_ms);
  r.read("link", prefix + "_overhead_ms", m.overhead_ms);
  r.read("link", prefix + "_sigma", m.sigma);
  r.read("link", prefix + "_tail_probability", m.tail_probability);
  r.read("link", prefix + "_tail_max_ms", m.tail_max_ms);
}

void read_sep(IniReader& r, const std::string& section, SepSynthesisConfig& c) {
  r.read(section, "mains_frequency_hz", c.mains_frequency_hz);
  r.read(section, "sample_rate_hz", c.sample_rate_hz);
  r.read(section, "signal_strength", c.signal_strength);
  r.read(section, "dc_drift", c.dc_drift);
  r.read(section, "amplitude_mod_depth", c.amplitude_mod_depth);
  r.read(section, "noise_sigma", c.noise_sigma);
  r.read(section, "quantization_bits", c.quantization_bits);
}

void read_conditioning(IniReader& r, ConditioningConfig& c) {
  if (const auto f = r.text("pipeline", "filter")) {
    if (*f == "bandpass") {
      c.filter = FilterKind::bandpass;
    } else if (*f == "mean_removal") {
      c.filter = FilterKind::mean_removal;
    } else {
      throw ConfigError("unknown filter '" + *f + "' (expected bandpass or mean_removal)");
    }
  }
  r.read("pipeline", "mean_removal_window", c.mean_removal_window);
  r.read("pipeline", "settle_ms", c.settle_ms);
}

void read_pll(IniReader& r, PllConfig& c) {
  r.read("pipeline", "nominal_period_ms", c.nominal_period_ms);
  r.read("pipeline", "proportional_gain", c.proportional_gain);
  r.read("pipeline", "integral_gain", c.integral_gain);
  r.read("pipeline", "skip_threshold_ms", c.skip_threshold_ms);
  r.read("pipeline", "convergence_window", c.convergence_window);
}

void read_solver(IniReader& r, SolverConfig& c) {
  r.read("solver", "period_ms", c.period_ms);
  r.read("solver", "max_sessions", c.max_sessions);
  r.read("solver", "retry_budget", c.retry_budget);
  r.read("solver", "match_tol_ms", c.match_tol_ms);
  r.read("solver", "wrap_guard_ms", c.wrap_guard_ms);
  const auto bounds = [&](const std::string& name, std::optional<IntRange>& target) {
    std::optional<int> lo, hi;
    r.read("solver", name + "_min", lo);
    r.read("solver", name + "_max", hi);
    if (lo.has_value() != hi.has_value()) {
      throw ConfigError("solver." + name + "_min and " + name + "_max must be given together");
    }
    if (lo) target = IntRange{*lo, *hi};
  };
  bounds("i", c.i_bounds);
  bounds("j", c.j_bounds);
}

std::vector<double> parse_list(const std::string& raw) {
  std::vector<double> out;
  std::istringstream in(raw);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream v(item);
    double x = 0.0;
    if (!(v >> x) || !(v >> std::ws).eof()) throw ConfigError("bad list entry '" + item + "'");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  IniReader r(in);
  ExperimentConfig c = default_experiment();
  if (const auto s = r.text("", "scenario")) c.scenario = scenario_from_string(*s);
  r.read("", "trials", c.trials);
  r.read("", "seed", c.seed);
  r.read("", "threads", c.threads);
  r.read("", "output", c.output_path);

  if (const auto preset = r.text("link", "preset")) c.link = preset_by_name(*preset);
  read_delay(r, "s2m", c.link.slave_to_master);
  read_delay(r, "m2s", c.link.master_to_slave);
  r.read("link", "drop_probability", c.link.drop_probability);

  read_sep(r, "sep", c.slave_sep);
  read_sep(r, "sep", c.master_sep);
  read_sep(r, "slave_sep", c.slave_sep);
  read_sep(r, "master_sep", c.master_sep);

  r.read("epsilon", "constant_ms", c.epsilon.constant_ms);
  r.read("epsilon", "max_abs_ms", c.epsilon.max_abs_ms);
  r.read("epsilon", "wander_amplitude_ms", c.epsilon.wander_amplitude_ms);
  r.read("epsilon", "wander_period_s", c.epsilon.wander_period_s);

  r.read("clocks", "drift_ppm_max", c.drift_ppm_max);
  r.read("clocks", "offset_range_ms", c.offset_range_ms);

  r.read("session", "compute_delay_ms", c.session.compute_delay_ms);
  r.read("session", "safeguard_ms", c.session.safeguard_ms);
  r.read("session", "reply_timeout_ms", c.session.reply_timeout_ms);
  r.read("session", "gap_ms", c.session_gap_ms);
  r.read("session", "sessions_per_trial", c.sessions_per_trial);

  read_conditioning(r, c.session.pipeline.conditioning);
  read_pll(r, c.session.pipeline.pll);
  read_solver(r, c.solver);
  c.session.period_ms = c.solver.period_ms;

  r.reject_unknown();
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  auto in = open(path);
  return parse_experiment_config(in);
}

StudyConfig parse_study_config(std::istream& in) {
  IniReader r(in);
  StudyConfig c;
  r.read("", "seed", c.seed);
  r.read("", "trials", c.trials);
  r.read("", "threads", c.threads);
  if (const auto s = r.text("", "scenario"); s && *s != "convergence_study") {
    throw ConfigError("study config must have scenario = convergence_study");
  }
  r.read("study", "i_max", c.i_max);
  r.read("study", "j_max", c.j_max);
  r.read("study", "period_ms", c.period_ms);
  r.read("study", "prior_knowledge", c.prior_knowledge);
  r.read("study", "max_sessions", c.max_sessions);
  r.reject_unknown();
  validate(c);
  return c;
}

StudyConfig load_study_config(const std::string& path) {
  auto in = open(path);
  return parse_study_config(in);
}

SweepConfig parse_sweep_config(std::istream& in) {
  IniReader r(in);
  SweepConfig c = default_sweep();
  if (const auto s = r.text("", "scenario"); s && *s != "strength_sweep") {
    throw ConfigError("sweep config must have scenario = strength_sweep");
  }
  r.read("", "seed", c.baseline.rng_seed);
  r.read("sweep", "duration_s", c.duration_s);
  if (const auto ratios = r.text("sweep", "ratios")) c.ratios = parse_list(*ratios);
  read_sep(r, "sep", c.baseline);
  read_conditioning(r, c.conditioning);
  r.reject_unknown();
  validate(c.baseline);
  return c;
}

SweepConfig load_sweep_config(const std::string& path) {
  auto in = open(path);
  return parse_sweep_config(in);
}

std::uint64_t parse_bench_seed(std::istream& in) {
  IniReader r(in);
  if (const auto s = r.text("", "scenario"); s && *s != "pipeline_bench") {
    throw ConfigError("bench config must have scenario = pipeline_bench");
  }
  std::uint64_t seed = 1;
  r.read("", "seed", seed);
  r.reject_unknown();
  return seed;
}

std::uint64_t load_bench_seed(const std::string& path) {
  auto in = open(path);
  return parse_bench_seed(in);
}

SolverConfig parse_solver_config(std::istream& in) {
  IniReader r(in);
  SolverConfig c;
  read_solver(r, c);
  r.reject_unknown();
  validate(c);
  return c;
}

SolverConfig load_solver_config(const std::string& path) {
  auto in = open(path);
  return parse_solver_config(in);
}

}  // namespace sepsync
