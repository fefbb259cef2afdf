#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nck {

enum class ErrorCode {
    NonSquare,
    NonFinite,
    NonHermitian,
    NonPositiveC,
    DimensionMismatch,
    SizeMismatch,
    DegenerateWeight,
    ZeroWitness,
    DTooLarge,
    SpaceTooLarge,
    NotOrthonormal,
    IdentityViolation,
    StalledIteration,
    InvalidArgument,
    ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonSquare: return "NonSquare";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NonHermitian: return "NonHermitian";
        case ErrorCode::NonPositiveC: return "NonPositiveC";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::DegenerateWeight: return "DegenerateWeight";
        case ErrorCode::ZeroWitness: return "ZeroWitness";
        case ErrorCode::DTooLarge: return "DTooLarge";
        case ErrorCode::SpaceTooLarge: return "SpaceTooLarge";
        case ErrorCode::NotOrthonormal: return "NotOrthonormal";
        case ErrorCode::IdentityViolation: return "IdentityViolation";
        case ErrorCode::StalledIteration: return "StalledIteration";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable error code. `index` holds the
/// offending step, atom or field position when one is meaningful.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::size_t> index = std::nullopt)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code), index_(index) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> index_;
};

}  // namespace nck
