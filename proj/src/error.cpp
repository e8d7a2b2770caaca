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

#include "bprr/error.hpp"

namespace bprr {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kContract: return "ContractError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kEmptyCluster: return "EmptyCluster";
    case ErrorCode::kInfeasibleEdge: return "InfeasibleEdge";
    case ErrorCode::kPlacementInfeasible: return "PlacementInfeasible";
    case ErrorCode::kNoFeasiblePath: return "NoFeasiblePath";
    case ErrorCode::kNeverAvailable: return "NeverAvailable";
    case ErrorCode::kCapacityViolated: return "CapacityViolated";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInvariantViolated: return "InvariantViolated";
  }
  return "Error";
}

}  // namespace bprr
