#pragma once

#include <stdexcept>
#include <string>

namespace sketchkit {

// Values are part of the C API and the CLI exit-code table; do not renumber.
enum class ErrorCode : int {
  Ok = 0,
  Internal = 1,
  ParseError = 3,
  IoError = 4,
  DimMismatch = 5,
  BadParams = 6,
  RankDeficient = 7,
  BadRank = 8,
  BlowupExceeded = 9,
  DegenerateNorm = 10,
  NoConvergence = 11,
  RankLost = 12,
  DegenerateResidual = 13,
  BarrierStuck = 14,
  RankCollapse = 15,
};

const char* error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace sketchkit
