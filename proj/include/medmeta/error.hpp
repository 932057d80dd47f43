#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medmeta {

enum class ErrorCode {
    AmbiguousSummary,
    ParseError,
    MissingQuartiles,
    ZeroIQR,
    InvalidParams,
    DomainError,
    WrongScenario,
    TooFewStudies,
    NoConvergence,
    NonPositiveSupport,
    ZeroDensity,
    EmptyInput,
    NonPositiveVariance,
    NoAcceptedDraws,
    SampleTooSmall,
    SampleTooLarge,
    InvalidConfig,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code so the
// CLI can surface structured errors per method.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace medmeta
