#pragma once

#include <stdexcept>
#include <string>

namespace nhpp_sched {

enum class ErrorCode {
  InvalidArgument = 1,
  Domain,
  Unreachable,
  StepTooCoarse,
  MissingClosure,
  Divergence,
  NonConvergence,
  GuardExceeded,
  Config,
  Io,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the C
// layer can map it onto a status value without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t task_position, double expected_attempts)
      : Error(ErrorCode::Divergence, what),
        task_position_(task_position),
        expected_attempts_(expected_attempts) {}

  std::size_t task_position() const noexcept { return task_position_; }
  double expected_attempts() const noexcept { return expected_attempts_; }

 private:
  std::size_t task_position_;
  double expected_attempts_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace nhpp_sched
