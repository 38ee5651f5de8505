#pragma once

#include <stdexcept>
#include <string>

namespace robroute {

enum class ErrorCode {
    ParseError,
    DimensionMismatch,
    NonPositiveTime,
    TooFewScenarios,
    BadFoldCount,
    NonPositiveFreeFlow,
    Unreachable,
    NegativeCost,
    ExplosionGuard,
    BadGamma,
    BadAlpha,
    BadEpsilon,
    NoConvergence,
    DegenerateData,
    BlockedGeometry,
    InsufficientCandidates,
    IoError,
    ConfigError,
    NumericalError,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Single exception type for all domain errors; tests match on code().
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) raise(code, what);
}

} // namespace robroute
