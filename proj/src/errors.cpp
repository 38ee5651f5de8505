#include "robroute/errors.hpp"

namespace robroute {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonPositiveTime: return "NonPositiveTime";
        case ErrorCode::TooFewScenarios: return "TooFewScenarios";
        case ErrorCode::BadFoldCount: return "BadFoldCount";
        case ErrorCode::NonPositiveFreeFlow: return "NonPositiveFreeFlow";
        case ErrorCode::Unreachable: return "Unreachable";
        case ErrorCode::NegativeCost: return "NegativeCost";
        case ErrorCode::ExplosionGuard: return "ExplosionGuard";
        case ErrorCode::BadGamma: return "BadGamma";
        case ErrorCode::BadAlpha: return "BadAlpha";
        case ErrorCode::BadEpsilon: return "BadEpsilon";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::BlockedGeometry: return "BlockedGeometry";
        case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::NumericalError: return "NumericalError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

} // namespace robroute
