// Copyright 2026 The refeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refeval {

// Stable, machine-readable error codes. The string forms are part of the
// CLI contract and must not change.
enum class ErrorCode {
  kInvalidCoordinate,
  kInvalidBox,
  kSumMismatch,
  kSizeLimit,
  kZeroPredictions,
  kEmptyGt,
  kDimensionMismatch,
  kEmptyInput,
  kUnknownReferringId,
  kMalformedOutput,
  kBadIndexToken,
  kIndexOutOfRange,
  kSchemaError,
  kMissingMask,
  kConfigInfeasible,
  kInvalidConfig,
  kIoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidCoordinate: return "INVALID_COORDINATE";
    case ErrorCode::kInvalidBox: return "INVALID_BOX";
    case ErrorCode::kSumMismatch: return "SUM_MISMATCH";
    case ErrorCode::kSizeLimit: return "SIZE_LIMIT";
    case ErrorCode::kZeroPredictions: return "ZERO_PREDICTIONS";
    case ErrorCode::kEmptyGt: return "EMPTY_GT";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kUnknownReferringId: return "UNKNOWN_REFERRING_ID";
    case ErrorCode::kMalformedOutput: return "MALFORMED_OUTPUT";
    case ErrorCode::kBadIndexToken: return "BAD_INDEX_TOKEN";
    case ErrorCode::kIndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::kSchemaError: return "SCHEMA_ERROR";
    case ErrorCode::kMissingMask: return "MISSING_MASK";
    case ErrorCode::kConfigInfeasible: return "CONFIG_INFEASIBLE";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kIoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : Error(code, detail, std::string(to_string(code)) + ": " + detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 protected:
  Error(ErrorCode code, const std::string& detail, const std::string& what)
      : std::runtime_error(what), code_(code), detail_(detail) {}

 private:
  ErrorCode code_;
  std::string detail_;
};

// Raised by the line-delimited readers; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& detail)
      : Error(code, detail,
              "line " + std::to_string(line) + ": " +
                  std::string(to_string(code)) + ": " + detail),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace refeval
