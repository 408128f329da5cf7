#pragma once

#include <stdexcept>
#include <string>

namespace histoconv {

// Error categories map 1:1 onto CLI exit codes and C API status values.
enum class ErrorCode : int {
  internal = 1,
  config = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace histoconv
