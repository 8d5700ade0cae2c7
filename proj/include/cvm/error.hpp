// Copyright 2026 The CVM Analytics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CVM_ERROR_HPP_
#define CVM_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvm {

enum class ErrorCode {
  kSyntax,
  kDuplicateId,
  kDanglingChild,
  kCycle,
  kInvalidTree,
  kUnknownNode,
  kUnknownColumn,
  kOutOfRange,
  kMalformedRow,
  kUnknownRole,
  kNoData,
  kSingular,
  kInsufficientData,
  kMissingModel,
  kInvalidArgument,
  kInconsistentTargets,
  kNotConverged,
  kIo,
  kRefused,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "syntax error";
    case ErrorCode::kDuplicateId: return "duplicate id";
    case ErrorCode::kDanglingChild: return "dangling child reference";
    case ErrorCode::kCycle: return "cycle";
    case ErrorCode::kInvalidTree: return "invalid tree";
    case ErrorCode::kUnknownNode: return "unknown node";
    case ErrorCode::kUnknownColumn: return "unknown column";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kMalformedRow: return "malformed row";
    case ErrorCode::kUnknownRole: return "unknown role";
    case ErrorCode::kNoData: return "no data";
    case ErrorCode::kSingular: return "singular design";
    case ErrorCode::kInsufficientData: return "insufficient data";
    case ErrorCode::kMissingModel: return "missing model";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInconsistentTargets: return "inconsistent targets";
    case ErrorCode::kNotConverged: return "not converged";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kRefused: return "refused";
  }
  return "error";
}

// All library failures are reported as cvm::Error; code() identifies the
// failure class, what() carries the human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Diagnostic without the error-class prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace cvm

#endif  // CVM_ERROR_HPP_
