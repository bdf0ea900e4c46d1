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

#include "gazecheck/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <sstream>

#include "gazecheck/rng.hpp"
#include "json.hpp"

namespace gazecheck {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::uint64_t kPoseMapSeed = 0x706f73656d6170ull;  // "posemap"

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// 16x2, orthonormal columns (Gram-Schmidt on seeded normals).
const std::array<std::array<double, 2>, kPoseCodeDim>& pose_map() {
  static const auto map = [] {
    std::array<std::array<double, 2>, kPoseCodeDim> m{};
    SplitMix64 rng(kPoseMapSeed);
    for (auto& row : m) row = {rng.normal(), rng.normal()};
    auto dot = [&](int a, int b) {
      double s = 0;
      for (auto& row : m) s += row[a] * row[b];
      return s;
    };
    double n0 = std::sqrt(dot(0, 0));
    for (auto& row : m) row[0] /= n0;
    double p = dot(0, 1);
    for (auto& row : m) row[1] -= p * row[0];
    double n1 = std::sqrt(dot(1, 1));
    for (auto& row : m) row[1] /= n1;
    return m;
  }();
  return map;
}

std::vector<std::size_t> choose(std::size_t n, std::size_t k, SplitMix64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

/// Offset of magnitude 2 tol + U[0, tol) in a random direction; an axis whose
/// shifted value would leave [lo, hi] is reflected back instead.
AnglePair shifted(const AnglePair& a, double tol, double lo, double hi, SplitMix64& rng) {
  const double mag = 2.0 * tol + rng.uniform(0.0, tol);
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
  auto move = [&](double v, double d) {
    double t = v + d;
    if (t < lo || t > hi) t = v - d;
    return std::clamp(t, lo, hi);
  };
  return {move(a.pitch, mag * std::cos(dir)), move(a.yaw, mag * std::sin(dir))};
}

}  // namespace

std::string to_string(CorruptionMode m) {
  switch (m) {
    case CorruptionMode::LabelNoise: return "label-noise";
    case CorruptionMode::LabelSwap: return "label-swap";
    case CorruptionMode::FeatureNoise: return "feature-noise";
  }
  return "label-noise";
}

CorruptionMode parse_corruption_mode(std::string_view s) {
  if (s == "label-noise") return CorruptionMode::LabelNoise;
  if (s == "label-swap") return CorruptionMode::LabelSwap;
  if (s == "feature-noise") return CorruptionMode::FeatureNoise;
  fail(ErrorCode::InvalidArgument, "corruption mode " + std::string(s));
}

void GenConfig::validate() const {
  if (!(corruption_fraction >= 0.0 && corruption_fraction <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "corruption_fraction");
  }
  if (!(gaze_range.min < gaze_range.max) || !(pose_range.min < pose_range.max)) {
    fail(ErrorCode::InvalidArgument, "angle range");
  }
  if (participants == 0) fail(ErrorCode::InvalidArgument, "participants");
  if (!(code_noise_sigma_deg >= 0.0)) fail(ErrorCode::InvalidArgument, "code_noise_sigma");
  tolerances.validate();
}

std::vector<double> gaze_code_of(const AnglePair& gaze) {
  return {gaze.pitch * kDegToRad, gaze.yaw * kDegToRad};
}

std::vector<double> pose_code_of(const AnglePair& pose) {
  const auto& m = pose_map();
  std::vector<double> code(kPoseCodeDim);
  for (std::size_t i = 0; i < kPoseCodeDim; ++i) {
    code[i] = (m[i][0] * pose.pitch + m[i][1] * pose.yaw) * kDegToRad;
  }
  return code;
}

SampleRecord codes_from_labels(const SampleRecord& rec, double noise_sigma_deg,
                               std::uint64_t seed) {
  SampleRecord out = rec;
  SplitMix64 rng(derive_seed(seed, fnv1a(rec.sample_id)));
  auto noisy = [&](const AnglePair& a) {
    if (noise_sigma_deg == 0.0) return a;
    double dp = rng.normal() * noise_sigma_deg;
    double dy = rng.normal() * noise_sigma_deg;
    return AnglePair{a.pitch + dp, a.yaw + dy};
  };
  out.gaze_code = gaze_code_of(noisy(rec.gaze_label));
  out.pose_code = pose_code_of(noisy(rec.pose_label));
  return out;
}

Dataset gen_dataset(const GenConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.meta.source = "datagen";
  ds.meta.seed = cfg.seed;
  ds.records.reserve(cfg.n);
  std::ostringstream prefix;
  prefix << 's' << std::hex << cfg.seed << '-';
  for (std::size_t i = 0; i < cfg.n; ++i) {
    SplitMix64 rng(derive_seed(cfg.seed, 0x67656e, i));
    SampleRecord r;
    r.sample_id = prefix.str() + std::to_string(i);
    r.participant_id = "p" + std::to_string(i % cfg.participants);
    r.gaze_label = {rng.uniform(cfg.gaze_range.min, cfg.gaze_range.max),
                    rng.uniform(cfg.gaze_range.min, cfg.gaze_range.max)};
    r.pose_label = {rng.uniform(cfg.pose_range.min, cfg.pose_range.max),
                    rng.uniform(cfg.pose_range.min, cfg.pose_range.max)};
    ds.records.push_back(codes_from_labels(r, cfg.code_noise_sigma_deg, cfg.seed));
  }
  ds.meta.has_gaze_codes = ds.meta.has_pose_codes = cfg.n > 0;
  return ds;
}

OverlapResult plant_overlap(const Dataset& reference, double fraction, std::uint64_t seed,
                            const GenConfig& fresh) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail(ErrorCode::InvalidArgument, "overlap fraction");
  const std::size_t n = reference.size();
  const std::size_t k = rounded_count(fraction, n);
  SplitMix64 rng(derive_seed(seed, 0x6f7665));
  auto picked = choose(n, k, rng);

  GenConfig fresh_cfg = fresh;
  fresh_cfg.n = n - k;
  fresh_cfg.seed = derive_seed(seed, 0x667265);
  Dataset extra = gen_dataset(fresh_cfg);

  OverlapResult res;
  res.owner.meta.source = "overlap";
  res.owner.meta.seed = seed;
  std::ostringstream prefix;
  prefix << 'o' << std::hex << seed << '-';
  std::size_t next_id = 0;
  for (auto idx : picked) {
    SampleRecord copy = reference.records[idx];
    std::string owner_id = prefix.str() + std::to_string(next_id++);
    res.mapping.emplace_back(owner_id, copy.sample_id);
    copy.sample_id = owner_id;
    res.owner.records.push_back(std::move(copy));
  }
  for (auto& r : extra.records) {
    r.sample_id = prefix.str() + std::to_string(next_id++);
    res.owner.records.push_back(std::move(r));
  }
  // Interleave copies and fresh samples so position carries no information.
  for (std::size_t i = res.owner.records.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(res.owner.records[i - 1], res.owner.records[j]);
  }
  res.owner = validate_dataset(res.owner);
  return res;
}

std::set<std::string> CorruptionMask::ids() const {
  std::set<std::string> out;
  for (const auto& e : entries) out.insert(e.sample_id);
  return out;
}

std::pair<Dataset, CorruptionMask> corrupt(const Dataset& ds, const GenConfig& cfg) {
  cfg.validate();
  Dataset out = ds;
  CorruptionMask mask;
  const std::size_t m = rounded_count(cfg.corruption_fraction, ds.size());
  SplitMix64 rng(derive_seed(cfg.seed, 0x636f72));
  auto picked = choose(ds.size(), m, rng);
  const auto& tol = cfg.tolerances;

  for (auto idx : picked) {
    const auto& r = ds.records[idx];
    mask.entries.push_back({r.sample_id, r.gaze_label, r.pose_label, r.gaze_code, r.pose_code});
  }

  switch (cfg.corruption_mode) {
    case CorruptionMode::LabelNoise:
      for (auto idx : picked) {
        auto& r = out.records[idx];
        r.gaze_label = shifted(r.gaze_label, tol.gaze_tol_deg, tol.angle_min_deg,
                               tol.angle_max_deg, rng);
        r.pose_label = shifted(r.pose_label, tol.pose_tol_deg, tol.angle_min_deg,
                               tol.angle_max_deg, rng);
      }
      break;
    case CorruptionMode::LabelSwap:
      // Cyclic rotation: with two picks this is a plain swap.
      for (std::size_t i = 0; i < picked.size(); ++i) {
        const auto& src = ds.records[picked[(i + 1) % picked.size()]];
        out.records[picked[i]].gaze_label = src.gaze_label;
        out.records[picked[i]].pose_label = src.pose_label;
      }
      break;
    case CorruptionMode::FeatureNoise:
      for (auto idx : picked) {
        auto& r = out.records[idx];
        if (r.angles_only()) r = codes_from_labels(r, cfg.code_noise_sigma_deg, cfg.seed);
        AnglePair g = shifted(r.gaze_label, tol.gaze_tol_deg, tol.angle_min_deg,
                              tol.angle_max_deg, rng);
        AnglePair p = shifted(r.pose_label, tol.pose_tol_deg, tol.angle_min_deg,
                              tol.angle_max_deg, rng);
        auto dg = gaze_code_of({g.pitch - r.gaze_label.pitch, g.yaw - r.gaze_label.yaw});
        auto dp = pose_code_of({p.pitch - r.pose_label.pitch, p.yaw - r.pose_label.yaw});
        if (r.gaze_code) {
          for (std::size_t i = 0; i < dg.size(); ++i) (*r.gaze_code)[i] += dg[i];
        }
        if (r.pose_code) {
          for (std::size_t i = 0; i < dp.size(); ++i) (*r.pose_code)[i] += dp[i];
        }
      }
      break;
  }
  return {std::move(out), std::move(mask)};
}

std::set<std::string> effective_corruptions(const Dataset& corrupted, const CorruptionMask& mask,
                                            Channel channel, const ToleranceConfig& tol) {
  std::unordered_map<std::string, const SampleRecord*> by_id;
  for (const auto& r : corrupted.records) by_id.emplace(r.sample_id, &r);
  std::set<std::string> out;
  for (const auto& e : mask.entries) {
    auto it = by_id.find(e.sample_id);
    if (it == by_id.end()) continue;
    const SampleRecord& r = *it->second;
    bool changed = false;
    if (uses_gaze(channel)) {
      changed |= quantize_label(r.gaze_label, tol.gaze_tol_deg, tol) !=
                 quantize_label(e.original_gaze, tol.gaze_tol_deg, tol);
      changed |= e.original_gaze_code.has_value() && r.gaze_code != e.original_gaze_code;
    }
    if (uses_pose(channel)) {
      changed |= quantize_label(r.pose_label, tol.pose_tol_deg, tol) !=
                 quantize_label(e.original_pose, tol.pose_tol_deg, tol);
      changed |= e.original_pose_code.has_value() && r.pose_code != e.original_pose_code;
    }
    if (changed) out.insert(e.sample_id);
  }
  return out;
}

void write_mask_file(const std::string& path, const CorruptionMask& mask) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  for (const auto& e : mask.entries) {
    nlohmann::json j;
    j["sample_id"] = e.sample_id;
    j["gaze_pitch"] = e.original_gaze.pitch;
    j["gaze_yaw"] = e.original_gaze.yaw;
    j["pose_pitch"] = e.original_pose.pitch;
    j["pose_yaw"] = e.original_pose.yaw;
    j["gaze_code"] = e.original_gaze_code ? nlohmann::json(*e.original_gaze_code) : nullptr;
    j["pose_code"] = e.original_pose_code ? nlohmann::json(*e.original_pose_code) : nullptr;
    out << j.dump() << '\n';
  }
}

CorruptionMask read_mask_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  CorruptionMask mask;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      auto j = nlohmann::json::parse(line);
      MaskEntry e;
      e.sample_id = j.at("sample_id").get<std::string>();
      e.original_gaze = {j.at("gaze_pitch").get<double>(), j.at("gaze_yaw").get<double>()};
      e.original_pose = {j.at("pose_pitch").get<double>(), j.at("pose_yaw").get<double>()};
      if (j.contains("gaze_code") && !j["gaze_code"].is_null()) {
        e.original_gaze_code = j["gaze_code"].get<std::vector<double>>();
      }
      if (j.contains("pose_code") && !j["pose_code"].is_null()) {
        e.original_pose_code = j["pose_code"].get<std::vector<double>>();
      }
      mask.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return mask;
}

}  // namespace gazecheck
