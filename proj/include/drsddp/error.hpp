#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drsddp {

enum class ErrorCode {
    InvalidInput,
    NumericalFailure,
    OracleTooLarge,
    Infeasible,
    InvalidDistribution,
    DegenerateSet,
    InvalidLevel,
    InvalidParameters,
    InsufficientData,
    StageInfeasible,
    NonpositiveLowerBound,
    DimensionMismatch,
    InfeasibleConfig,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Carries a machine-readable code and the name of the
/// module that raised it so front ends can report provenance.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string module, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }
    /// Message without the module and code prefix.
    const std::string& detail() const noexcept { return detail_; }

    /// Same error with `context` prepended to the message.
    Error with_context(const std::string& context) const { return Error(code_, module_, context + ": " + detail_); }

private:
    ErrorCode code_;
    std::string module_;
    std::string detail_;
};

}  // namespace drsddp
