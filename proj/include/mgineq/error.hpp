#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mgineq {

enum class ErrorCode {
  MissingZeroIncrement,
  InvalidIncrements,
  NotIdentityAtZero,
  PlusInfinityPayoff,
  NotANumber,
  IndexOutOfRange,
  InvalidTie,
  PlusInfinityValue,
  InvalidSamples,
  UndefinedSuperdifferential,
  LengthMismatch,
  BadTolerance,
  BadCap,
  MissingCoordinates,
  IncompleteTable,
  UndefinedStrategyState,
  DegenerateKernel,
  InvalidTree,
  OutsideStateSpace,
  NonSharpConstant,
  InvalidParameter,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingZeroIncrement: return "MissingZeroIncrement";
    case ErrorCode::InvalidIncrements: return "InvalidIncrements";
    case ErrorCode::NotIdentityAtZero: return "NotIdentityAtZero";
    case ErrorCode::PlusInfinityPayoff: return "PlusInfinityPayoff";
    case ErrorCode::NotANumber: return "NotANumber";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidTie: return "InvalidTie";
    case ErrorCode::PlusInfinityValue: return "PlusInfinityValue";
    case ErrorCode::InvalidSamples: return "InvalidSamples";
    case ErrorCode::UndefinedSuperdifferential: return "UndefinedSuperdifferential";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadTolerance: return "BadTolerance";
    case ErrorCode::BadCap: return "BadCap";
    case ErrorCode::MissingCoordinates: return "MissingCoordinates";
    case ErrorCode::IncompleteTable: return "IncompleteTable";
    case ErrorCode::UndefinedStrategyState: return "UndefinedStrategyState";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::OutsideStateSpace: return "OutsideStateSpace";
    case ErrorCode::NonSharpConstant: return "NonSharpConstant";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> state = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), state_(state) {}

  ErrorCode code() const noexcept { return code_; }
  // State the error refers to, when there is one.
  std::optional<std::size_t> state() const noexcept { return state_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> state_;
};

}  // namespace mgineq
