// Copyright 2026 The fairex Authors
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

#include "fairex/error.hpp"

namespace fairex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kEmptyCore: return "empty_core";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kReference: return "reference";
    case ErrorCode::kHeterogeneity: return "heterogeneity";
    case ErrorCode::kCapacity: return "capacity";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kPropensity: return "propensity";
    case ErrorCode::kEmptyCandidate: return "empty_candidate";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace fairex
