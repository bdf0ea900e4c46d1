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

#include "gazecheck/encode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gazecheck/datagen.hpp"
#include "gazecheck/rng.hpp"

namespace gazecheck {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::uint64_t kLiftStream = 0x6c696674;   // "lift"
constexpr std::uint64_t kBasisStream = 0x6261736973; // "basis"
}  // namespace

LshBasis make_basis(std::uint64_t seed, std::size_t dim, std::size_t bits) {
  if (dim == 0) fail(ErrorCode::ZeroDim);
  if (bits == 0) fail(ErrorCode::ZeroBits);
  LshBasis b{seed, dim, bits, {}};
  b.hyperplanes.resize(dim * bits);
  SplitMix64 rng(seed);
  for (auto& v : b.hyperplanes) v = rng.normal();
  return b;
}

Digest lsh_sign(std::span<const double> code, const LshBasis& basis) {
  if (code.size() != basis.dim) {
    fail(ErrorCode::DimMismatch,
         "expected " + std::to_string(basis.dim) + ", actual " + std::to_string(code.size()));
  }
  if (std::all_of(code.begin(), code.end(), [](double v) { return v == 0.0; })) {
    fail(ErrorCode::ZeroVector);
  }
  Digest d(basis.bits);
  for (std::size_t i = 0; i < basis.bits; ++i) {
    auto row = basis.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < basis.dim; ++j) dot += row[j] * code[j];
    d.set_bit(i, dot > 0.0);
  }
  return d;
}

void ToleranceConfig::validate() const {
  if (!(gaze_tol_deg > 0.0) || !(pose_tol_deg > 0.0)) {
    fail(ErrorCode::InvalidArgument, "tolerances must be positive");
  }
  if (!(angle_min_deg < angle_max_deg)) fail(ErrorCode::InvalidArgument, "angle range");
}

QuantizedLabel quantize_label(const AnglePair& a, double tol_deg, const ToleranceConfig& cfg,
                              Channel channel) {
  if (!(tol_deg > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (!std::isfinite(a.pitch) || !std::isfinite(a.yaw)) fail(ErrorCode::NonFiniteAngle);
  auto bucket = [&](double v) {
    double c = std::clamp(v, cfg.angle_min_deg, cfg.angle_max_deg);
    return static_cast<std::int32_t>(std::floor((c - cfg.angle_min_deg) / tol_deg));
  };
  return {channel, bucket(a.pitch), bucket(a.yaw)};
}

AnglePair bucket_representative(const QuantizedLabel& q, double tol_deg,
                                const ToleranceConfig& cfg) {
  auto centre = [&](std::int32_t b) {
    double lo = cfg.angle_min_deg + b * tol_deg;
    return std::min(lo + tol_deg / 2.0, cfg.angle_max_deg);
  };
  return {centre(q.bucket_pitch), centre(q.bucket_yaw)};
}

std::vector<double> FeatureLift::apply(std::span<const double> code) const {
  if (code.size() != input_dim) {
    fail(ErrorCode::DimMismatch,
         "expected " + std::to_string(input_dim) + ", actual " + std::to_string(code.size()));
  }
  std::vector<double> out(features);
  for (std::size_t f = 0; f < features; ++f) {
    const double* w = frequencies.data() + f * input_dim;
    double dot = phases[f];
    for (std::size_t j = 0; j < input_dim; ++j) dot += w[j] * code[j];
    out[f] = std::cos(dot);
  }
  return out;
}

FeatureLift make_lift(std::uint64_t seed, std::size_t input_dim, std::size_t features,
                      double bandwidth_deg) {
  if (input_dim == 0) fail(ErrorCode::ZeroDim);
  if (features == 0) fail(ErrorCode::ZeroBits, "lift features");
  if (!(bandwidth_deg > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth");
  FeatureLift lift{input_dim, features, {}, {}};
  lift.frequencies.resize(input_dim * features);
  lift.phases.resize(features);
  SplitMix64 rng(derive_seed(seed, kLiftStream, input_dim));
  const double inv_bw = 1.0 / (bandwidth_deg * kDegToRad);
  for (auto& w : lift.frequencies) w = rng.normal() * inv_bw;
  for (auto& p : lift.phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return lift;
}

std::size_t code_dim(Channel c) {
  switch (c) {
    case Channel::Gaze: return kGazeCodeDim;
    case Channel::Pose: return kPoseCodeDim;
    case Channel::Both: return kGazeCodeDim + kPoseCodeDim;
  }
  return kGazeCodeDim;
}

ChannelEncoder::ChannelEncoder(Channel channel, const LshConfig& cfg)
    : channel_(channel),
      cfg_(cfg),
      lift_(make_lift(cfg.seed, code_dim(channel), cfg.lift_features, cfg.bandwidth_deg)),
      basis_(make_basis(derive_seed(cfg.seed, kBasisStream, code_dim(channel)),
                        cfg.lift_features, cfg.bits)) {}

Digest ChannelEncoder::digest(std::span<const double> code) const {
  return lsh_sign(lift_.apply(code), basis_);
}

std::vector<double> channel_code(const SampleRecord& r, Channel c) {
  auto need = [&](const std::optional<std::vector<double>>& code, const char* name) {
    if (!code) fail(ErrorCode::MissingCode, r.sample_id + ", " + name);
    return *code;
  };
  switch (c) {
    case Channel::Gaze: return need(r.gaze_code, "gaze");
    case Channel::Pose: return need(r.pose_code, "pose");
    case Channel::Both: {
      auto g = need(r.gaze_code, "both");
      auto p = need(r.pose_code, "both");
      g.insert(g.end(), p.begin(), p.end());
      return g;
    }
  }
  return {};
}

std::vector<HashedRecord> encode_dataset(const Dataset& ds, const ChannelEncoder& enc,
                                         const ToleranceConfig& cfg, const SynthOptions& synth) {
  cfg.validate();
  const Channel ch = enc.channel();
  std::vector<HashedRecord> out;
  out.reserve(ds.records.size());
  for (const auto& rec : ds.records) {
    const SampleRecord* src = &rec;
    SampleRecord synthesized;
    if (rec.angles_only()) {
      synthesized = codes_from_labels(rec, synth.noise_sigma_deg, synth.seed);
      src = &synthesized;
    }
    HashedRecord h;
    h.sample_id = rec.sample_id;
    h.digest = enc.digest(channel_code(*src, ch));
    if (uses_gaze(ch)) h.gaze = quantize_label(rec.gaze_label, cfg.gaze_tol_deg, cfg, Channel::Gaze);
    if (uses_pose(ch)) h.pose = quantize_label(rec.pose_label, cfg.pose_tol_deg, cfg, Channel::Pose);
    out.push_back(std::move(h));
  }
  return out;
}

double CalibrationCurve::rate(std::size_t bits) const {
  if (bits == 0 || bits > collisions.size() || trials == 0) {
    fail(ErrorCode::InvalidArgument, "bit count outside curve");
  }
  return static_cast<double>(collisions[bits - 1]) / static_cast<double>(trials);
}

CalibrationCurve collision_curve(double tol_deg, std::size_t trials, std::size_t max_bits,
                                 std::uint64_t seed, const LshConfig& base) {
  if (!(tol_deg > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (trials == 0) fail(ErrorCode::InvalidArgument, "trials");
  constexpr std::size_t kBasisPool = 64;
  std::vector<ChannelEncoder> pool;
  pool.reserve(kBasisPool);
  for (std::size_t i = 0; i < kBasisPool; ++i) {
    LshConfig c = base;
    c.seed = derive_seed(seed, 0x63616c, i);
    c.bits = max_bits;
    pool.emplace_back(Channel::Gaze, c);
  }
  CalibrationCurve curve{trials, std::vector<std::size_t>(max_bits, 0)};
  SplitMix64 rng(seed);
  const double margin = 2.0 * tol_deg;
  for (std::size_t t = 0; t < trials; ++t) {
    AnglePair a{rng.uniform(kNominalAngleMin + margin, kNominalAngleMax - margin),
                rng.uniform(kNominalAngleMin + margin, kNominalAngleMax - margin)};
    const double sep = tol_deg * (1.0 + (1.0 - rng.uniform()));  // (tol, 2 tol]
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    AnglePair b{a.pitch + sep * std::cos(dir), a.yaw + sep * std::sin(dir)};
    const auto& enc = pool[t % kBasisPool];
    Digest da = enc.digest(gaze_code_of(a));
    Digest db = enc.digest(gaze_code_of(b));
    std::size_t first_diff = max_bits;
    for (std::size_t i = 0; i < max_bits; ++i) {
      if (da.bit(i) != db.bit(i)) {
        first_diff = i;
        break;
      }
    }
    // Prefixes of length <= first_diff agree.
    for (std::size_t bits = 1; bits <= first_diff; ++bits) ++curve.collisions[bits - 1];
  }
  return curve;
}

std::size_t calibrate_bits(double target_collision, double tol_deg, std::size_t trials,
                           std::uint64_t seed, const LshConfig& base) {
  if (!(target_collision > 0.0) || target_collision > 1.0) {
    fail(ErrorCode::InvalidArgument, "target collision must lie in (0, 1]");
  }
  constexpr std::size_t kMaxBits = 256;
  if (target_collision * static_cast<double>(trials) < 1.0) {
    fail(ErrorCode::Unreachable, std::to_string(target_collision));
  }
  auto curve = collision_curve(tol_deg, trials, kMaxBits, seed, base);
  for (std::size_t bits = 1; bits <= kMaxBits; ++bits) {
    if (curve.rate(bits) <= target_collision) return bits;
  }
  fail(ErrorCode::Unreachable, std::to_string(target_collision));
}

}  // namespace gazecheck
