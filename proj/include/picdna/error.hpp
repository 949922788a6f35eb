#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace picdna {

enum class ErrorCode {
  dimension,
  structure,
  parse,
  incomplete_layer,
  padding_contract,
  corruption,
  decode,
  gap,
  integrity,
  capacity,
  unidentified_primer,
  contract,
  consensus_failure,
  io,
  usage,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::structure: return "structure";
    case ErrorCode::parse: return "parse";
    case ErrorCode::incomplete_layer: return "incomplete_layer";
    case ErrorCode::padding_contract: return "padding_contract";
    case ErrorCode::corruption: return "corruption";
    case ErrorCode::decode: return "decode";
    case ErrorCode::gap: return "gap";
    case ErrorCode::integrity: return "integrity";
    case ErrorCode::capacity: return "capacity";
    case ErrorCode::unidentified_primer: return "unidentified_primer";
    case ErrorCode::contract: return "contract";
    case ErrorCode::consensus_failure: return "consensus_failure";
    case ErrorCode::io: return "io";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

// Single exception type for the library; the code is machine-readable and
// `detail` carries the offending index/layer/line where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, long long detail = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  long long detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  long long detail_;
};

}  // namespace picdna
