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
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gazecheck/encode.hpp"
#include "gazecheck/model.hpp"

namespace gazecheck {

enum class CorruptionMode : std::uint8_t { LabelNoise, LabelSwap, FeatureNoise };

std::string to_string(CorruptionMode m);
CorruptionMode parse_corruption_mode(std::string_view s);

struct AngleRange {
  double min = kNominalAngleMin;
  double max = kNominalAngleMax;
};

struct GenConfig {
  std::size_t n = 0;
  std::size_t participants = 15;
  std::uint64_t seed = 0;
  AngleRange gaze_range{-45.0, 45.0};
  AngleRange pose_range{-30.0, 30.0};
  double code_noise_sigma_deg = 0.005;
  double corruption_fraction = 0.0;
  CorruptionMode corruption_mode = CorruptionMode::LabelNoise;
  ToleranceConfig tolerances;

  void validate() const;
};

/// `n` records with uniform angles, round-robin participants and codes
/// synthesized from the labels.
Dataset gen_dataset(const GenConfig& cfg);

/// Gaze code: (pitch, yaw) in radians. Pose code: a fixed seeded 16x2 map with
/// orthonormal columns applied to the pose angles in radians, so code distance
/// equals angular label distance. Gaussian noise (degrees) perturbs the angles
/// before mapping; the noise stream is keyed by (seed, sample_id).
SampleRecord codes_from_labels(const SampleRecord& rec, double noise_sigma_deg, std::uint64_t seed);

std::vector<double> gaze_code_of(const AnglePair& gaze);
std::vector<double> pose_code_of(const AnglePair& pose);

struct OverlapResult {
  Dataset owner;
  /// (owner sample_id, reference sample_id) for every planted copy.
  std::vector<std::pair<std::string, std::string>> mapping;
};

/// Owner dataset of the same size as `reference`: round(fraction * n) exact
/// copies under fresh ids, the rest freshly generated.
OverlapResult plant_overlap(const Dataset& reference, double fraction, std::uint64_t seed,
                            const GenConfig& fresh = {});

struct MaskEntry {
  std::string sample_id;
  AnglePair original_gaze;
  AnglePair original_pose;
  std::optional<std::vector<double>> original_gaze_code;
  std::optional<std::vector<double>> original_pose_code;
};

struct CorruptionMask {
  std::vector<MaskEntry> entries;

  std::set<std::string> ids() const;
  std::size_t size() const { return entries.size(); }
};

/// Applies cfg.corruption_mode to round(cfg.corruption_fraction * n) records.
std::pair<Dataset, CorruptionMask> corrupt(const Dataset& ds, const GenConfig& cfg);

/// Masked ids whose corruption is observable on `channel`: the quantized label
/// (label modes) or the code (feature mode) actually changed.
std::set<std::string> effective_corruptions(const Dataset& corrupted, const CorruptionMask& mask,
                                            Channel channel, const ToleranceConfig& tol);

void write_mask_file(const std::string& path, const CorruptionMask& mask);
CorruptionMask read_mask_file(const std::string& path);

}  // namespace gazecheck
