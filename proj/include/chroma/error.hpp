#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chroma {

enum class ErrorCode {
  InvalidArgument,
  Degenerate,
  OutOfRange,
  Io,
  Format,
  NotFound,
  Conflict,
  NoData,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and is what the CLI prints in its machine-parsable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chroma
