#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace srir {

enum class ErrorCode {
  kParse,
  kUnsupportedGeometry,
  kReference,
  kDomain,
  kRange,
  kDegreeZero,
  kUnsupportedScene,
  kUnsupported,
  kConfig,
  kAlignment,
  kShape,
  kInsufficientDecay,
  kNumerical,
  kTraining,
  kInfeasibleScene,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code lets
/// callers (and the CLI exit-code policy) dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace srir
