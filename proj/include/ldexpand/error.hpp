#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldexpand {

/// Failure categories surfaced by the library. The CLI maps groups of these
/// onto process exit codes.
enum class Errc {
    InvalidArgument,
    Overflow,
    UnsupportedOrder,
    NonConvexDetected,
    Unbounded,
    NoConvergence,
    AllStartsFailed,
    BracketNotFound,
    NotApplicable,
    OrderAnomalous,
    EnvelopeExceeded,
    NegativeDiffusion,
    DegenerateExponent,
    FitIllConditioned,
    StabilityViolation,
    BoundaryLeak,
    GenericMeasureUnsupported,
    ConfigError,
    MissingArtifacts,
};

constexpr std::string_view to_string(Errc c) {
    switch (c) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::Overflow: return "Overflow";
        case Errc::UnsupportedOrder: return "UnsupportedOrder";
        case Errc::NonConvexDetected: return "NonConvexDetected";
        case Errc::Unbounded: return "Unbounded";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::AllStartsFailed: return "AllStartsFailed";
        case Errc::BracketNotFound: return "BracketNotFound";
        case Errc::NotApplicable: return "NotApplicable";
        case Errc::OrderAnomalous: return "OrderAnomalous";
        case Errc::EnvelopeExceeded: return "EnvelopeExceeded";
        case Errc::NegativeDiffusion: return "NegativeDiffusion";
        case Errc::DegenerateExponent: return "DegenerateExponent";
        case Errc::FitIllConditioned: return "FitIllConditioned";
        case Errc::StabilityViolation: return "StabilityViolation";
        case Errc::BoundaryLeak: return "BoundaryLeak";
        case Errc::GenericMeasureUnsupported: return "GenericMeasureUnsupported";
        case Errc::ConfigError: return "ConfigError";
        case Errc::MissingArtifacts: return "MissingArtifacts";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, const std::string& what) {
    if (!ok) fail(Errc::InvalidArgument, what);
}

}  // namespace ldexpand
