#include "drsddp/error.hpp"

namespace drsddp {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::NumericalFailure: return "NumericalFailure";
        case ErrorCode::OracleTooLarge: return "OracleTooLarge";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::InvalidDistribution: return "InvalidDistribution";
        case ErrorCode::DegenerateSet: return "DegenerateSet";
        case ErrorCode::InvalidLevel: return "InvalidLevel";
        case ErrorCode::InvalidParameters: return "InvalidParameters";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::StageInfeasible: return "StageInfeasible";
        case ErrorCode::NonpositiveLowerBound: return "NonpositiveLowerBound";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string module, const std::string& message)
    : std::runtime_error("[" + module + "] " + std::string(to_string(code)) + ": " + message),
      code_(code),
      module_(std::move(module)),
      detail_(message) {}

}  // namespace drsddp
