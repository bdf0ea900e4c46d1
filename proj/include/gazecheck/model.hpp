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
#include <optional>
#include <string>
#include <vector>

#include "gazecheck/bytes.hpp"

namespace gazecheck {

inline constexpr std::size_t kGazeCodeDim = 2;
inline constexpr std::size_t kPoseCodeDim = 16;
inline constexpr double kNominalAngleMin = -45.0;
inline constexpr double kNominalAngleMax = 45.0;

/// Pitch/yaw in degrees.
struct AnglePair {
  double pitch = 0.0;
  double yaw = 0.0;

  bool operator==(const AnglePair&) const = default;
};

/// Outside the nominal [-45, 45] range. Outliers are kept, not rejected.
bool is_outlier(const AnglePair& a);

struct SampleRecord {
  std::string sample_id;
  std::string participant_id;
  std::optional<std::vector<double>> gaze_code;
  std::optional<std::vector<double>> pose_code;
  AnglePair gaze_label;
  AnglePair pose_label;

  bool angles_only() const { return !gaze_code && !pose_code; }
  bool operator==(const SampleRecord&) const = default;
};

struct DatasetMeta {
  std::string source;
  std::uint64_t seed = 0;
  bool has_gaze_codes = false;
  bool has_pose_codes = false;

  bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
  std::vector<SampleRecord> records;
  DatasetMeta meta;

  std::size_t size() const { return records.size(); }
  bool operator==(const Dataset&) const = default;
};

enum class Channel : std::uint8_t { Gaze = 0, Pose = 1, Both = 2 };

std::string to_string(Channel c);
Channel parse_channel(std::string_view s);
bool uses_gaze(Channel c);
bool uses_pose(Channel c);

/// Tolerance bucket of one angle pair. Channel is Gaze or Pose, never Both.
struct QuantizedLabel {
  Channel channel = Channel::Gaze;
  std::int32_t bucket_pitch = 0;
  std::int32_t bucket_yaw = 0;

  bool operator==(const QuantizedLabel&) const = default;
};

/// Fixed-width LSH signature, packed big-endian: bit 0 is the MSB of byte 0.
class Digest {
 public:
  Digest() = default;
  explicit Digest(std::size_t width);
  Digest(std::size_t width, Bytes packed);

  std::size_t width() const { return width_; }
  bool bit(std::size_t i) const;
  void set_bit(std::size_t i, bool value);
  const Bytes& bytes() const { return packed_; }
  std::size_t hamming(const Digest& other) const;

  bool operator==(const Digest&) const = default;
  auto operator<=>(const Digest&) const = default;

 private:
  std::size_t width_ = 0;
  Bytes packed_;
};

struct DigestHash {
  std::size_t operator()(const Digest& d) const noexcept;
};

struct ChannelTally {
  std::size_t compliant = 0;
  std::size_t non_compliant = 0;

  bool operator==(const ChannelTally&) const = default;
};

/// Outcome of one verification from the owner's point of view. In
/// cardinality-only runs the id lists stay empty and only counts are set.
struct VerificationReport {
  Channel channel = Channel::Gaze;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double mcc = 0.0;
  std::vector<std::string> mismatched_ids;
  std::vector<std::string> compliant_ids;
  std::vector<std::string> unmatched_ids;
  std::size_t compliant_cardinality = 0;
  std::size_t non_compliant_cardinality = 0;
  std::size_t matched_elements = 0;
  std::size_t evaluated = 0;
  bool cardinality_only = false;
  ChannelTally gaze;
  ChannelTally pose;

  bool operator==(const VerificationReport&) const = default;
};

/// Checks every dataset invariant and returns the canonical form
/// (negative zeros folded, code vectors copied as-is).
Dataset validate_dataset(const Dataset& ds);

/// Newline-delimited JSON; lines starting with '#' are header comments.
Dataset read_dataset(std::istream& in, std::string_view source = "stream");
Dataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& ds, std::string_view header = {});
void write_dataset_file(const std::string& path, const Dataset& ds, std::string_view header = {});

}  // namespace gazecheck
