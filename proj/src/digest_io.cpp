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

#include <fstream>
#include <sstream>

#include "gazecheck/encode.hpp"
#include "json.hpp"

namespace gazecheck {

using nlohmann::json;

namespace {

json label_json(const std::optional<QuantizedLabel>& q) {
  if (!q) return nullptr;
  return json::array({q->bucket_pitch, q->bucket_yaw});
}

std::optional<QuantizedLabel> label_from(const json& j, Channel c) {
  if (j.is_null()) return std::nullopt;
  return QuantizedLabel{c, j.at(0).get<std::int32_t>(), j.at(1).get<std::int32_t>()};
}

}  // namespace

void write_digest_file(const std::string& path, const DigestFile& f, std::string_view header) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  if (!header.empty()) {
    std::istringstream lines{std::string(header)};
    std::string l;
    while (std::getline(lines, l)) out << "# " << l << '\n';
  }
  const auto& m = f.meta;
  json meta = {{"lsh_seed", m.lsh.seed},
               {"bits", m.lsh.bits},
               {"lift_features", m.lsh.lift_features},
               {"bandwidth_deg", m.lsh.bandwidth_deg},
               {"channel", to_string(m.channel)},
               {"gaze_tol_deg", m.tolerances.gaze_tol_deg},
               {"pose_tol_deg", m.tolerances.pose_tol_deg},
               {"angle_min_deg", m.tolerances.angle_min_deg},
               {"angle_max_deg", m.tolerances.angle_max_deg}};
  out << json{{"meta", meta}}.dump() << '\n';
  for (const auto& r : f.records) {
    json j = {{"sample_id", r.sample_id},
              {"digest", to_hex(r.digest.bytes())},
              {"gaze", label_json(r.gaze)},
              {"pose", label_json(r.pose)}};
    out << j.dump() << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed " + path);
}

DigestFile read_digest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  DigestFile f;
  bool have_meta = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      auto j = json::parse(line);
      if (j.contains("meta")) {
        const auto& m = j["meta"];
        f.meta.lsh.seed = m.at("lsh_seed").get<std::uint64_t>();
        f.meta.lsh.bits = m.at("bits").get<std::size_t>();
        f.meta.lsh.lift_features = m.at("lift_features").get<std::size_t>();
        f.meta.lsh.bandwidth_deg = m.at("bandwidth_deg").get<double>();
        f.meta.channel = parse_channel(m.at("channel").get<std::string>());
        f.meta.tolerances.gaze_tol_deg = m.at("gaze_tol_deg").get<double>();
        f.meta.tolerances.pose_tol_deg = m.at("pose_tol_deg").get<double>();
        f.meta.tolerances.angle_min_deg = m.at("angle_min_deg").get<double>();
        f.meta.tolerances.angle_max_deg = m.at("angle_max_deg").get<double>();
        have_meta = true;
        continue;
      }
      if (!have_meta) fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": record before meta");
      HashedRecord r;
      r.sample_id = j.at("sample_id").get<std::string>();
      r.digest = Digest(f.meta.lsh.bits, from_hex(j.at("digest").get<std::string>()));
      r.gaze = label_from(j.value("gaze", json(nullptr)), Channel::Gaze);
      r.pose = label_from(j.value("pose", json(nullptr)), Channel::Pose);
      f.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) throw;
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_meta) fail(ErrorCode::ParseError, path + ": missing meta line");
  return f;
}

}  // namespace gazecheck
