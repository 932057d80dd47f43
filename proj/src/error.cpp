#include "medmeta/error.hpp"

namespace medmeta {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::AmbiguousSummary: return "AmbiguousSummary";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingQuartiles: return "MissingQuartiles";
    case ErrorCode::ZeroIQR: return "ZeroIQR";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::WrongScenario: return "WrongScenario";
    case ErrorCode::TooFewStudies: return "TooFewStudies";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonPositiveSupport: return "NonPositiveSupport";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::NoAcceptedDraws: return "NoAcceptedDraws";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace medmeta
