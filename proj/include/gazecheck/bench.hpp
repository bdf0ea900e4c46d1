// Copyright 2026 The gazecheck Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gazecheck/group.hpp"
#include "gazecheck/model.hpp"
#include "gazecheck/session.hpp"

namespace gazecheck {

inline constexpr std::size_t kDefaultBenchCeiling = std::size_t{1} << 16;

struct BenchConfig {
  std::vector<std::size_t> sizes;
  std::vector<ProtocolVersion> versions;
  std::size_t repetitions = 3;
  Channel channel = Channel::Gaze;
  GroupId group = GroupId::P256;
  std::uint64_t seed = 1;
  double overlap = 0.5;
  double corruption_fraction = 0.1;
  /// Sizes above 2^16 are refused unless set.
  bool allow_large = false;
};

/// Medians over `repetitions` runs. Bytes are counted at the owner's end.
struct BenchResult {
  ProtocolVersion version = ProtocolVersion::V1;
  std::size_t dataset_size = 0;
  double online_ms = 0;
  double offline_ms = 0;
  double online_min_ms = 0;
  double online_max_ms = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::size_t repetitions = 0;
  std::size_t match_count = 0;
};

/// 2^8, 2^9, ..., 2^16.
std::vector<std::size_t> default_bench_sizes();

/// InvalidArgument for non-powers of two, OutOfMemory (with guidance) for
/// sizes above the ceiling without allow_large.
void validate_bench_config(const BenchConfig& cfg);

/// One in-process session per (size, version, repetition); both roles share a
/// single worker each, in lockstep.
std::vector<BenchResult> run_bench(const BenchConfig& cfg,
                                   const std::function<void(const BenchResult&)>& progress = {});

/// Rows are versions, columns sizes: median online ms, then (version - V0)
/// overhead when V0 was measured, then offline ms and bytes.
void write_bench_table(std::ostream& out, const std::vector<BenchResult>& results);
std::string bench_json(const std::vector<BenchResult>& results);

}  // namespace gazecheck
