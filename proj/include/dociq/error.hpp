// Copyright 2026 The DocIQ Authors
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

namespace dociq {

enum class ErrorKind {
  kInvalidArgument,
  kUnsupportedDistortion,
  kParse,
  kIntegrity,
  kScreeningDegenerate,
  kMissingScores,
  kSplitInfeasible,
  kUndefinedCorrelation,
  kConfiguration,
  kInvalidTarget,
  kDivergence,
  kNoData,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kUnsupportedDistortion: return "unsupported distortion";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIntegrity: return "referential integrity error";
    case ErrorKind::kScreeningDegenerate: return "screening degenerate";
    case ErrorKind::kMissingScores: return "missing scores";
    case ErrorKind::kSplitInfeasible: return "split infeasible";
    case ErrorKind::kUndefinedCorrelation: return "undefined correlation";
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kInvalidTarget: return "invalid target";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kNoData: return "no data";
    case ErrorKind::kIo: return "io error";
  }
  return "error";
}

}  // namespace dociq
