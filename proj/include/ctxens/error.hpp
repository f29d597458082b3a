#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxens {

/// Failure categories surfaced by the library. The CLI prints the name
/// alongside the message, so these names are part of the user-facing contract.
enum class ErrorCode {
    DimensionMismatch,
    ConflictingFeature,
    IndexOutOfRange,
    NormalizationDegenerate,
    SingularStatistics,
    NoConvergence,
    OrderingViolated,
    EmptyData,
    NonFiniteLoss,
    NonFiniteGradient,
    NonFiniteValue,
    ConstraintViolated,
    SeriesTooShort,
    SingularDesign,
    LengthMismatch,
    ConfigInvalid,
    ParseError,
    IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }
    /// Message without the name prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace ctxens
