#pragma once

// Flat INI-style configuration files:
//
//   format_version = 1
//   scenario = e2e_sync
//   [link]
//   preset = ble
//
// Comments start with ';'. Unknown keys are rejected so typos surface.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sepsync/ias.hpp"
#include "sepsync/netsim.hpp"

namespace sepsync {

inline constexpr int kConfigFormatVersion = 1;

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

StudyConfig parse_study_config(std::istream& in);
StudyConfig load_study_config(const std::string& path);

SweepConfig parse_sweep_config(std::istream& in);
SweepConfig load_sweep_config(const std::string& path);

/// pipeline_bench: only a top-level seed.
std::uint64_t parse_bench_seed(std::istream& in);
std::uint64_t load_bench_seed(const std::string& path);

/// [solver] section only.
SolverConfig parse_solver_config(std::istream& in);
SolverConfig load_solver_config(const std::string& path);

}  // namespace sepsync
