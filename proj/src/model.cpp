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

#include "gazecheck/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace gazecheck {

using nlohmann::json;

bool is_outlier(const AnglePair& a) {
  auto out = [](double v) { return v < kNominalAngleMin || v > kNominalAngleMax; };
  return out(a.pitch) || out(a.yaw);
}

std::string to_string(Channel c) {
  switch (c) {
    case Channel::Gaze: return "gaze";
    case Channel::Pose: return "pose";
    case Channel::Both: return "both";
  }
  return "gaze";
}

Channel parse_channel(std::string_view s) {
  if (s == "gaze") return Channel::Gaze;
  if (s == "pose") return Channel::Pose;
  if (s == "both") return Channel::Both;
  fail(ErrorCode::InvalidArgument, "channel " + std::string(s));
}

bool uses_gaze(Channel c) { return c != Channel::Pose; }
bool uses_pose(Channel c) { return c != Channel::Gaze; }

Digest::Digest(std::size_t width) : width_(width), packed_((width + 7) / 8, 0) {}

Digest::Digest(std::size_t width, Bytes packed) : width_(width), packed_(std::move(packed)) {
  if (packed_.size() != (width + 7) / 8) fail(ErrorCode::InvalidArgument, "digest length");
  if (width % 8 != 0 && !packed_.empty()) {
    auto pad_mask = static_cast<std::uint8_t>(0xff >> (width % 8));
    if ((packed_.back() & pad_mask) != 0) fail(ErrorCode::InvalidArgument, "digest padding");
  }
}

bool Digest::bit(std::size_t i) const { return (packed_[i / 8] >> (7 - i % 8)) & 1u; }

void Digest::set_bit(std::size_t i, bool value) {
  auto mask = static_cast<std::uint8_t>(1u << (7 - i % 8));
  if (value) {
    packed_[i / 8] |= mask;
  } else {
    packed_[i / 8] &= static_cast<std::uint8_t>(~mask);
  }
}

std::size_t Digest::hamming(const Digest& other) const {
  if (other.width_ != width_) fail(ErrorCode::DimMismatch, "digest width");
  std::size_t d = 0;
  for (std::size_t i = 0; i < packed_.size(); ++i) {
    d += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(packed_[i] ^ other.packed_[i])));
  }
  return d;
}

std::size_t DigestHash::operator()(const Digest& d) const noexcept {
  // FNV-1a over the packed bytes.
  std::uint64_t h = 1469598103934665603ull ^ d.width();
  for (auto b : d.bytes()) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

namespace {

double canonical(double v, const std::string& id) {
  if (!std::isfinite(v)) fail(ErrorCode::NonFiniteAngle, id);
  return v == 0.0 ? 0.0 : v;
}

void check_code(const std::optional<std::vector<double>>& code, std::size_t dim,
                const std::string& id) {
  if (!code) return;
  if (code->size() != dim) {
    fail(ErrorCode::BadCodeDim,
         id + ", expected " + std::to_string(dim) + ", actual " + std::to_string(code->size()));
  }
  for (double v : *code) {
    if (!std::isfinite(v)) fail(ErrorCode::BadCodeDim, id + ", non-finite component");
  }
}

json code_to_json(const std::optional<std::vector<double>>& code) {
  if (!code) return nullptr;
  return *code;
}

std::optional<std::vector<double>> code_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::vector<double>>();
}

}  // namespace

Dataset validate_dataset(const Dataset& ds) {
  Dataset out = ds;
  std::unordered_set<std::string> seen;
  bool gaze = !out.records.empty();
  bool pose = !out.records.empty();
  for (auto& r : out.records) {
    if (!seen.insert(r.sample_id).second) fail(ErrorCode::DuplicateId, r.sample_id);
    check_code(r.gaze_code, kGazeCodeDim, r.sample_id);
    check_code(r.pose_code, kPoseCodeDim, r.sample_id);
    r.gaze_label.pitch = canonical(r.gaze_label.pitch, r.sample_id);
    r.gaze_label.yaw = canonical(r.gaze_label.yaw, r.sample_id);
    r.pose_label.pitch = canonical(r.pose_label.pitch, r.sample_id);
    r.pose_label.yaw = canonical(r.pose_label.yaw, r.sample_id);
    gaze = gaze && r.gaze_code.has_value();
    pose = pose && r.pose_code.has_value();
  }
  out.meta.has_gaze_codes = gaze;
  out.meta.has_pose_codes = pose;
  return out;
}

Dataset read_dataset(std::istream& in, std::string_view source) {
  Dataset ds;
  ds.meta.source = std::string(source);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      auto j = json::parse(line);
      SampleRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.participant_id = j.value("participant_id", std::string{});
      r.gaze_code = code_from_json(j.value("gaze_code", json(nullptr)));
      r.pose_code = code_from_json(j.value("pose_code", json(nullptr)));
      r.gaze_label = {j.at("gaze_pitch").get<double>(), j.at("gaze_yaw").get<double>()};
      r.pose_label = {j.at("pose_pitch").get<double>(), j.at("pose_yaw").get<double>()};
      ds.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError,
           std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return validate_dataset(ds);
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  return read_dataset(in, path);
}

void write_dataset(std::ostream& out, const Dataset& ds, std::string_view header) {
  if (!header.empty()) {
    std::istringstream lines{std::string(header)};
    std::string l;
    while (std::getline(lines, l)) out << "# " << l << '\n';
  }
  for (const auto& r : ds.records) {
    json j;
    j["sample_id"] = r.sample_id;
    j["participant_id"] = r.participant_id;
    j["gaze_code"] = code_to_json(r.gaze_code);
    j["pose_code"] = code_to_json(r.pose_code);
    j["gaze_pitch"] = r.gaze_label.pitch;
    j["gaze_yaw"] = r.gaze_label.yaw;
    j["pose_pitch"] = r.pose_label.pitch;
    j["pose_yaw"] = r.pose_label.yaw;
    out << j.dump() << '\n';
  }
}

void write_dataset_file(const std::string& path, const Dataset& ds, std::string_view header) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  write_dataset(out, ds, header);
  if (!out) fail(ErrorCode::IoError, "write failed " + path);
}

}  // namespace gazecheck
