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
#include <span>
#include <string>
#include <vector>

#include "gazecheck/model.hpp"

namespace gazecheck {

inline constexpr std::size_t kDefaultDigestBits = 80;

/// Random-hyperplane basis. Rows are drawn from SplitMix64(seed) through
/// Box-Muller, filled row-major: row i, column j is the (i*dim + j)-th normal.
/// A basis with fewer bits is therefore a row prefix of one with more bits.
struct LshBasis {
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::size_t bits = 0;
  std::vector<double> hyperplanes;  // bits x dim, row-major

  std::span<const double> row(std::size_t i) const {
    return {hyperplanes.data() + i * dim, dim};
  }
};

LshBasis make_basis(std::uint64_t seed, std::size_t dim, std::size_t bits);

/// Bit i is set iff <row i, code> > 0; an exact zero gives 0.
Digest lsh_sign(std::span<const double> code, const LshBasis& basis);

struct ToleranceConfig {
  double gaze_tol_deg = 3.0;
  double pose_tol_deg = 5.0;
  double angle_min_deg = kNominalAngleMin;
  double angle_max_deg = kNominalAngleMax;

  void validate() const;
  double tolerance(Channel c) const { return c == Channel::Pose ? pose_tol_deg : gaze_tol_deg; }
  bool operator==(const ToleranceConfig&) const = default;
};

/// floor((clamp(angle) - min) / tol), independently for pitch and yaw.
QuantizedLabel quantize_label(const AnglePair& a, double tol_deg, const ToleranceConfig& cfg,
                              Channel channel = Channel::Gaze);

/// Centre of a bucket; quantizing it returns the same bucket.
AnglePair bucket_representative(const QuantizedLabel& q, double tol_deg, const ToleranceConfig& cfg);

/// Shift-invariant random Fourier lift applied before sign hashing. Gaze codes
/// have only two dimensions, and hyperplanes through the origin cannot resolve
/// more than their direction; the lift turns Euclidean proximity of codes into
/// angular proximity of features (cos angle ~ exp(-d^2 / 2 bw^2)).
struct FeatureLift {
  std::size_t input_dim = 0;
  std::size_t features = 0;
  std::vector<double> frequencies;  // features x input_dim, row-major
  std::vector<double> phases;       // features

  std::vector<double> apply(std::span<const double> code) const;
};

struct LshConfig {
  std::uint64_t seed = 0;
  std::size_t bits = kDefaultDigestBits;
  std::size_t lift_features = 256;
  /// Kernel bandwidth in degrees of code-space distance (codes are radians).
  double bandwidth_deg = 6.0;

  bool operator==(const LshConfig&) const = default;
};

FeatureLift make_lift(std::uint64_t seed, std::size_t input_dim, std::size_t features,
                      double bandwidth_deg);

std::size_t code_dim(Channel c);

/// Everything a party needs to hash one channel: both parties build the same
/// encoder from the negotiated LshConfig.
class ChannelEncoder {
 public:
  ChannelEncoder(Channel channel, const LshConfig& cfg);

  Channel channel() const { return channel_; }
  const LshConfig& config() const { return cfg_; }
  const LshBasis& basis() const { return basis_; }
  const FeatureLift& lift() const { return lift_; }

  Digest digest(std::span<const double> code) const;

 private:
  Channel channel_;
  LshConfig cfg_;
  FeatureLift lift_;
  LshBasis basis_;
};

struct HashedRecord {
  std::string sample_id;
  Digest digest;
  std::optional<QuantizedLabel> gaze;
  std::optional<QuantizedLabel> pose;

  bool operator==(const HashedRecord&) const = default;
};

/// Synthesis parameters applied to angles-only records.
struct SynthOptions {
  double noise_sigma_deg = 0.005;
  std::uint64_t seed = 0;
};

/// Code vector the channel hashes: gaze (2), pose (16) or both concatenated (18).
std::vector<double> channel_code(const SampleRecord& r, Channel c);

std::vector<HashedRecord> encode_dataset(const Dataset& ds, const ChannelEncoder& enc,
                                         const ToleranceConfig& cfg,
                                         const SynthOptions& synth = {});

struct CalibrationCurve {
  std::size_t trials = 0;
  /// collisions[b-1]: pairs whose first b bits agree.
  std::vector<std::size_t> collisions;
  double rate(std::size_t bits) const;
};

/// Monte-Carlo full-digest collision counts for gaze code pairs whose label
/// separation is uniform in (tol, 2 tol], for every prefix length up to max_bits.
CalibrationCurve collision_curve(double tol_deg, std::size_t trials, std::size_t max_bits = 256,
                                 std::uint64_t seed = 1, const LshConfig& base = {});

/// Smallest bit count whose empirical beyond-tolerance collision rate is
/// <= target. Throws Unreachable when no count up to 256 qualifies or the target
/// is below the resolution of `trials` samples.
std::size_t calibrate_bits(double target_collision, double tol_deg, std::size_t trials,
                           std::uint64_t seed = 1, const LshConfig& base = {});

/// Everything both sides must share for digests to be comparable.
struct EncodingMeta {
  LshConfig lsh;
  Channel channel = Channel::Gaze;
  ToleranceConfig tolerances;

  bool operator==(const EncodingMeta&) const = default;
};

struct DigestFile {
  EncodingMeta meta;
  std::vector<HashedRecord> records;
};

/// NDJSON: '#' header lines, one {"meta": ...} line, then one record per line
/// with the digest in hex.
void write_digest_file(const std::string& path, const DigestFile& f, std::string_view header = {});
DigestFile read_digest_file(const std::string& path);

}  // namespace gazecheck
