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

#include <gtest/gtest.h>

#include <vector>

#include "bprr/error.hpp"
#include "bprr/model.hpp"
#include "expect_error.hpp"
#include "fixtures.hpp"

namespace {

using bprr::Affine;
using bprr::Cluster;
using bprr::ErrorCode;
using bprr::Placement;

// One client, two servers; server 0 spans (1,4), server 1 spans (3,10).
// Prefill RTT 0.2 + 0.0005 l gives 0.21 s at l = 20.
Cluster timing_cluster() {
  Cluster c = fixture::uniform(12, 2, 1, 1, 100, 0.1, 0.02);
  c.model.max_input_tokens = 20;
  c.model.max_output_tokens = 8;
  c.clients[0].rtt_prefill.assign(2, Affine{0.2, 0.0005});
  for (auto& s : c.servers) s.tau_prefill = Affine{0.05, 0.0005};
  return c;
}

Placement timing_placement() { return Placement{{{1, 4}, {3, 10}}}; }

TEST(CacheSize, SmallSubstitution) {
  bprr::ModelSpec m;
  m.d_model = 4;
  m.dtype_bytes = 2;
  EXPECT_EQ(bprr::cache_size(m, 1, 1), 32);
}

TEST(CacheSize, LargeModelHandMultiplication) {
  bprr::ModelSpec m;
  m.d_model = 14336;
  m.dtype_bytes = 2;
  // 2 * 14336 = 28672; * 148 = 4243456; * 2 = 8486912.
  EXPECT_EQ(bprr::cache_size(m, 20, 128), 8'486'912);
}

TEST(CacheSize, ZeroOutputIsContractError) {
  bprr::ModelSpec m;
  expect_code(ErrorCode::kContract, [&] { bprr::cache_size(m, 1, 0); });
}

TEST(PerTokenTime, ServerToServer) {
  const Cluster c = timing_cluster();
  EXPECT_NEAR(bprr::per_token_time(c, timing_placement(), 0, 0, 1), 0.1 + 0.02 * 8, 1e-12);
}

TEST(PerTokenTime, FromClient) {
  Cluster c = timing_cluster();
  const Placement p{{{1, 5}, {3, 10}}};
  EXPECT_NEAR(bprr::per_token_time(c, p, 0, bprr::kSourceNode, 0), 0.2, 1e-12);
}

TEST(PerTokenTime, GapIsInfeasible) {
  Cluster c = timing_cluster();
  const Placement p{{{1, 2}, {5, 3}}};
  expect_code(ErrorCode::kInfeasibleEdge, [&] { bprr::per_token_time(c, p, 0, 0, 1); });
}

TEST(PerTokenTime, AffineInProcessedBlocks) {
  Cluster c = timing_cluster();
  for (int m = 4; m <= 9; ++m) {
    const Placement a{{{1, 4}, {3, m}}};
    const Placement b{{{1, 4}, {3, m + 1}}};
    EXPECT_NEAR(bprr::per_token_time(c, b, 0, 0, 1) - bprr::per_token_time(c, a, 0, 0, 1), 0.02,
                1e-12);
  }
}

TEST(PerTokenTimeFirst, Substitution) {
  const Cluster c = timing_cluster();
  EXPECT_NEAR(bprr::per_token_time_first(c, timing_placement(), 0, 0, 1, 20), 0.69, 1e-12);
}

TEST(PerTokenTimeFirst, InputAboveLimit) {
  const Cluster c = timing_cluster();
  expect_code(ErrorCode::kContract,
              [&] { bprr::per_token_time_first(c, timing_placement(), 0, 0, 1, 21); });
}

TEST(AvgPerTokenTime, TwoTokensIsMeanOfFirstAndDecode) {
  const Cluster c = timing_cluster();
  EXPECT_NEAR(bprr::avg_per_token_time(c, timing_placement(), 0, 0, 1, 20, 2), 0.475, 1e-12);
}

TEST(AvgPerTokenTime, OneTokenIsFirstTokenTime) {
  const Cluster c = timing_cluster();
  EXPECT_DOUBLE_EQ(bprr::avg_per_token_time(c, timing_placement(), 0, 0, 1, 20, 1),
                   bprr::per_token_time_first(c, timing_placement(), 0, 0, 1, 20));
}

TEST(AvgPerTokenTime, ConvergesMonotonicallyToDecodeTime) {
  Cluster c = timing_cluster();
  c.model.max_output_tokens = 4096;
  const double decode = bprr::per_token_time(c, timing_placement(), 0, 0, 1);
  double prev = 1e9;
  for (int l = 1; l <= 4096; l *= 2) {
    const double v = bprr::avg_per_token_time(c, timing_placement(), 0, 0, 1, 20, l);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, decode);
    prev = v;
  }
  EXPECT_NEAR(prev, decode, 1e-3);
}

TEST(TotalRequestTime, SingleHopOneToken) {
  Cluster c = timing_cluster();
  const Placement p{{{1, 12}, {3, 10}}};
  const std::vector<int> chain{0};
  EXPECT_NEAR(bprr::total_request_time(c, p, 0, chain, 20, 1),
              bprr::per_token_time_first(c, p, 0, bprr::kSourceNode, 0, 20), 1e-12);
}

TEST(TotalRequestTime, SingleServerHoldingAllBlocks) {
  // Steady-state per-token time of a one-hop chain is t + tau L.
  Cluster c = fixture::suboptimal_greedy(0.3, 0.05);
  const Placement p{std::vector<bprr::BlockSpan>(9, {1, 3})};
  const std::vector<int> chain{4};
  EXPECT_NEAR(bprr::total_request_time(c, p, 0, chain, 1, 1), 0.3 + 0.05 * 3, 1e-12);
}

TEST(TotalRequestTime, TwoHopsAreSumOfHops) {
  Cluster c = timing_cluster();
  const Placement p{{{1, 4}, {3, 10}}};
  const std::vector<int> chain{0, 1};
  const int lout = 5;
  // Independent per-hop sum: hop 1 processes 4 blocks, hop 2 processes 8.
  const double first = (0.21 + 0.06 * 4) + (0.21 + 0.06 * 8);
  const double decode = (0.1 + 0.02 * 4) + (0.1 + 0.02 * 8);
  EXPECT_NEAR(bprr::total_request_time(c, p, 0, chain, 20, lout), first + (lout - 1) * decode,
              1e-12);
}

TEST(TotalRequestTime, EqualsOutputLengthTimesAveragedHops) {
  Cluster c = timing_cluster();
  const Placement p{{{1, 4}, {3, 10}}};
  const std::vector<int> chain{0, 1};
  for (int lout = 1; lout <= 8; ++lout) {
    const double avg = bprr::avg_per_token_time(c, p, 0, bprr::kSourceNode, 0, 20, lout) +
                       bprr::avg_per_token_time(c, p, 0, 0, 1, 20, lout);
    EXPECT_NEAR(bprr::total_request_time(c, p, 0, chain, 20, lout), lout * avg, 1e-9);
  }
}

TEST(TotalRequestTime, IncompleteChainRejected) {
  Cluster c = timing_cluster();
  const Placement p{{{1, 4}, {3, 9}}};
  const std::vector<int> chain{0, 1};
  expect_code(ErrorCode::kInfeasibleEdge, [&] { bprr::total_request_time(c, p, 0, chain, 1, 1); });
}

TEST(ServerMemoryUsage, Examples) {
  bprr::ModelSpec m;
  m.block_bytes = 10;
  const Placement p{{{1, 2}}};
  EXPECT_EQ(bprr::server_memory_usage(m, p, 0, {}), 20);
  const std::vector<bprr::CacheUse> two{{2, 1}, {2, 1}};
  EXPECT_EQ(bprr::server_memory_usage(m, p, 0, two), 24);
}

TEST(ServerMemoryUsage, WorstCaseHomogeneous) {
  bprr::ModelSpec m;
  m.block_bytes = 7;
  const int mj = 3, R = 5, s_c = 2;
  const Placement p{{{1, mj}}};
  const std::vector<bprr::CacheUse> all(R, {mj, s_c});
  EXPECT_EQ(bprr::server_memory_usage(m, p, 0, all), 7 * mj + s_c * R * mj);
}

TEST(ServerMemoryUsage, MonotoneInCountsAndBlocks) {
  bprr::ModelSpec m;
  m.block_bytes = 4;
  std::vector<bprr::CacheUse> uses{{1, 3}};
  bprr::Bytes prev = 0;
  for (int k = 0; k < 5; ++k) {
    const Placement p{{{1, 1 + k}}};
    uses.push_back({k, 3});
    const bprr::Bytes now = bprr::server_memory_usage(m, p, 0, uses);
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(AmortizedTime, Examples) {
  Cluster one = fixture::uniform(10, 1, 1, 1, 100, 0.1, 0.02);
  EXPECT_NEAR(bprr::amortized_time(one, 0, 5), 0.04, 1e-12);
  EXPECT_NEAR(bprr::amortized_time(one, 0, 1), 0.12, 1e-12);
  Cluster two = fixture::uniform(10, 1, 1, 1, 100, 0.1, 0.01, 2);
  two.clients[1].rtt[0] = 0.3;
  EXPECT_NEAR(bprr::amortized_time(two, 0, 10), 0.04, 1e-12);
}

TEST(ServerCapacity, Examples) {
  bprr::ModelSpec m;
  m.block_bytes = 3;
  m.cache_bytes_override = 1;
  bprr::ServerSpec s{"s", 12, 0.1, {}};
  EXPECT_EQ(bprr::server_capacity(m, s, 1), 9);
  EXPECT_EQ(bprr::server_capacity(m, s, 4), 0);
  expect_code(ErrorCode::kContract, [&] { bprr::server_capacity(m, s, 5); });
}

TEST(ClusterValidate, RejectsUnusableServer) {
  Cluster c = fixture::uniform(3, 2, 3, 1, 12, 0.1, 0.1);
  c.servers[1].memory = 3;
  expect_code(ErrorCode::kValidation, [&] { c.validate(); });
}

TEST(ClusterValidate, RejectsMissingRtt) {
  Cluster c = fixture::uniform(3, 2, 3, 1, 12, 0.1, 0.1);
  c.clients[0].rtt.pop_back();
  expect_code(ErrorCode::kValidation, [&] { c.validate(); });
}

TEST(ClusterValidate, RejectsDuplicateIds) {
  Cluster c = fixture::uniform(3, 2, 3, 1, 12, 0.1, 0.1);
  c.servers[1].id = c.servers[0].id;
  expect_code(ErrorCode::kValidation, [&] { c.validate(); });
}

TEST(ModelValidate, SequenceLengthLimit) {
  bprr::ModelSpec m;
  m.max_input_tokens = 20;
  m.max_output_tokens = 128;
  m.max_sequence_length = 100;
  expect_code(ErrorCode::kValidation, [&] { m.validate(); });
  m.max_sequence_length = 148;
  EXPECT_NO_THROW(m.validate());
}

}  // namespace
