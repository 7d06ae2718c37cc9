#include "sketchkit/error.hpp"

namespace sketchkit {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::Internal: return "Internal";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::BadRank: return "BadRank";
    case ErrorCode::BlowupExceeded: return "BlowupExceeded";
    case ErrorCode::DegenerateNorm: return "DegenerateNorm";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankLost: return "RankLost";
    case ErrorCode::DegenerateResidual: return "DegenerateResidual";
    case ErrorCode::BarrierStuck: return "BarrierStuck";
    case ErrorCode::RankCollapse: return "RankCollapse";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace sketchkit
