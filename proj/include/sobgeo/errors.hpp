#pragma once

#include <stdexcept>
#include <string>

namespace sobgeo {

// Exit codes shared by the CLI and every failure class below.
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_immersion = 3;
inline constexpr int exit_convergence = 4;
inline constexpr int exit_io = 5;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed/inconsistent inputs, out-of-range configuration.
struct ValidationError : Error {
  using Error::Error;
};

// Immersion (or diffeomorphism) floor violated: the configuration left the
// chart on which the machinery is defined.  `time` < 0 means "at input".
struct ImmersionError : Error {
  explicit ImmersionError(const std::string& what, double time = -1.0)
      : Error(what), time(time) {}
  double time;
};

// Iterative procedure failed to reach its tolerance (shooting, Newton, or a
// guarded blow-up in a time stepper).
struct ConvergenceError : Error {
  using Error::Error;
};

// Filesystem-level failures (missing file, unwritable directory).
struct IoError : Error {
  using Error::Error;
};

}  // namespace sobgeo
