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

#include <cstdint>

namespace bprr {

/// A contiguous run of transformer blocks [first, first + count).
/// Blocks are numbered 1..L. The source client is the span {0, 1} and the
/// sink client is {L + 1, 1}. A server with count 0 hosts nothing.
struct BlockSpan {
  int first = 0;
  int count = 0;

  int end() const noexcept { return first + count; }
  int last() const noexcept { return first + count - 1; }
  bool empty() const noexcept { return count <= 0; }
  bool contains(int block) const noexcept { return block >= first && block < end(); }

  friend bool operator==(const BlockSpan&, const BlockSpan&) = default;
};

inline BlockSpan source_span() noexcept { return {0, 1}; }
inline BlockSpan sink_span(int blocks) noexcept { return {blocks + 1, 1}; }

/// True when a request that has finished block `prev.end() - 1` can continue
/// on `next` and make progress: next.first <= prev.end() <= next.end() - 1.
inline bool edge_feasible(const BlockSpan& prev, const BlockSpan& next) noexcept {
  if (prev.empty() || next.empty()) return false;
  return next.first <= prev.end() && prev.end() <= next.end() - 1;
}

/// Number of blocks `next` processes after `prev`. Only meaningful when
/// edge_feasible(prev, next) holds, in which case the result is >= 1.
inline int processed_blocks(const BlockSpan& prev, const BlockSpan& next) noexcept {
  return next.end() - prev.end();
}

}  // namespace bprr
