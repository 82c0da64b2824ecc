#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hktorus {

enum class ErrorCode {
  NonFinite,
  NonPositivePerimeter,
  InvalidRadius,
  PerimeterMismatch,
  InvalidState,
  InvalidN,
  NoNewLink,
  HorizonTooShort,
  CutPresent,
  RadiusTooLarge,
  WrongKind,
  AllMerged,
  NonConsecutive,
  StaleT0,
  InsufficientDecayData,
  ConfigInvalid,
  TraceCorrupt,
  UnknownCheck,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonPositivePerimeter: return "NonPositivePerimeter";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
    case ErrorCode::PerimeterMismatch: return "PerimeterMismatch";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidN: return "InvalidN";
    case ErrorCode::NoNewLink: return "NoNewLink";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::CutPresent: return "CutPresent";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::AllMerged: return "AllMerged";
    case ErrorCode::NonConsecutive: return "NonConsecutive";
    case ErrorCode::StaleT0: return "StaleT0";
    case ErrorCode::InsufficientDecayData: return "InsufficientDecayData";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::TraceCorrupt: return "TraceCorrupt";
    case ErrorCode::UnknownCheck: return "UnknownCheck";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI, the batch runner) can map it to a report entry.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hktorus
