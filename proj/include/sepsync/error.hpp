#pragma once

#include <stdexcept>

namespace sepsync {

/// Invalid configuration or argument outside its documented domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trace, buffer or comb does not cover the requested time interval.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The PLL was given too few zero crossings to lock.
class LockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request or reply1 was dropped by the link; the session produced no record.
class SessionAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No (i, j) pair satisfies the RTT consistency check for a session.
class NoCandidates : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every cluster of the solution space was eliminated by an intersection.
class EmptySolutionSpace : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (trace, zero-crossing or session CSV).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sepsync
