#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace quiverbl {

// Compact scientific formatting for diagnostics (std::to_string truncates
// small magnitudes to 0.000000).
inline std::string num_str(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", v);
  return buffer;
}

enum class ErrorCode {
  InvalidInput,
  InvalidGroupElement,
  NotPositiveDefinite,
  SingularMatrix,
  NumericError,
  NotAFixedPoint,
  WrongShape,
  NotGeometric,
  NotConverged,
  GenerationFailed,
  BudgetExceeded,
  NonInvariantFiltration,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidGroupElement: return "InvalidGroupElement";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NumericError: return "NumericError";
    case ErrorCode::NotAFixedPoint: return "NotAFixedPoint";
    case ErrorCode::WrongShape: return "WrongShape";
    case ErrorCode::NotGeometric: return "NotGeometric";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NonInvariantFiltration: return "NonInvariantFiltration";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Carries the offending minimum eigenvalue for diagnostics.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double min_eigenvalue)
      : Error(ErrorCode::SingularMatrix, what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class NonInvariantFiltrationError : public Error {
 public:
  NonInvariantFiltrationError(const std::string& what, double offending_magnitude,
                              int block_row, int block_col)
      : Error(ErrorCode::NonInvariantFiltration, what),
        offending_magnitude_(offending_magnitude),
        block_row_(block_row),
        block_col_(block_col) {}

  double offending_magnitude() const { return offending_magnitude_; }
  int block_row() const { return block_row_; }
  int block_col() const { return block_col_; }

 private:
  double offending_magnitude_;
  int block_row_;
  int block_col_;
};

}  // namespace quiverbl
