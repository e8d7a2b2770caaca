// Copyright 2026 The bprr Authors. All Rights Reserved.
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

namespace bprr {

enum class ErrorCode {
  kContract,            // precondition violated by the caller
  kValidation,          // malformed or inconsistent input document
  kEmptyCluster,
  kInfeasibleEdge,
  kPlacementInfeasible,
  kNoFeasiblePath,
  kNeverAvailable,
  kCapacityViolated,
  kBudgetExceeded,
  kInfeasible,
  kIo,
  kInvariantViolated,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Throws Error(kContract) when `condition` is false.
inline void require(bool condition, const char* message) {
  if (!condition) throw Error(ErrorCode::kContract, message);
}

}  // namespace bprr
