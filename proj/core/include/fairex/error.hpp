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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairex {

// Error categories shared by every module. The CLI maps them onto its
// structured error output.
enum class ErrorCode {
  kParse,
  kEmptyInput,
  kEmptyCore,
  kConfig,
  kReference,
  kHeterogeneity,
  kCapacity,
  kShape,
  kTraining,
  kPropensity,
  kEmptyCandidate,
  kIo,
  kFormat,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fairex
