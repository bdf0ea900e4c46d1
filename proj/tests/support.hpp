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

// Shared scaffolding for unit and acceptance tests.
#pragma once

#include <exception>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gazecheck/datagen.hpp"
#include "gazecheck/encode.hpp"
#include "gazecheck/error.hpp"
#include "gazecheck/session.hpp"
#include "gazecheck/transport.hpp"
#include "gazecheck/verify.hpp"

namespace gazecheck {

inline void PrintTo(ErrorCode c, std::ostream* os) { *os << to_string(c); }

}  // namespace gazecheck

namespace gazecheck::testing {

/// Code of the gazecheck::Error raised by f, or nullopt when it returns.
template <typename F>
std::optional<ErrorCode> error_code(F&& f, std::string* detail = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  return std::nullopt;
}

struct Scenario {
  SessionParams params;
  Dataset reference;
  Dataset owner;
  CorruptionMask mask;
  std::set<std::string> truth;
  std::vector<HashedRecord> ref_hashed;
  std::vector<HashedRecord> owner_hashed;
};

inline ToleranceConfig tolerances_of(const SessionParams& p) {
  ToleranceConfig t;
  t.gaze_tol_deg = p.gaze_tol_deg;
  t.pose_tol_deg = p.pose_tol_deg;
  return t;
}

inline std::vector<HashedRecord> encode_with(const Dataset& ds, const SessionParams& p) {
  const EncodingMeta m = p.encoding();
  return encode_dataset(ds, ChannelEncoder(m.channel, m.lsh), m.tolerances);
}

inline Scenario make_scenario(std::size_t n, double overlap, double corrupt_fraction,
                              CorruptionMode mode, Channel channel, std::uint64_t seed,
                              ProtocolVersion version = ProtocolVersion::V1) {
  Scenario s;
  s.params.version = version;
  s.params.channel = channel;
  s.params.lsh_seed = seed ^ 0x5eed;
  GenConfig gc;
  gc.n = n;
  gc.seed = seed;
  s.reference = gen_dataset(gc);
  GenConfig fresh = gc;
  Dataset owner = plant_overlap(s.reference, overlap, seed + 1, fresh).owner;
  GenConfig cc = gc;
  cc.seed = seed + 2;
  cc.corruption_fraction = corrupt_fraction;
  cc.corruption_mode = mode;
  auto [corrupted, mask] = corrupt(owner, cc);
  s.owner = std::move(corrupted);
  s.mask = std::move(mask);
  s.truth = effective_corruptions(s.owner, s.mask, channel, tolerances_of(s.params));
  s.ref_hashed = encode_with(s.reference, s.params);
  s.owner_hashed = encode_with(s.owner, s.params);
  return s;
}

struct PairResult {
  OwnerResult owner;
  ReferenceResult reference;
};

/// Runs both roles over an in-process duplex. The owner's error wins.
inline PairResult run_pair(const SessionParams& owner_params, const std::vector<HashedRecord>& owner,
                           const SessionParams& ref_params, const std::vector<HashedRecord>& reference,
                           const SessionOptions& owner_opt = {}, const SessionOptions& ref_opt = {},
                           const ReferenceResources& res = {}) {
  auto [a, b] = make_duplex();
  PairResult out;
  std::exception_ptr ref_err;
  std::thread ref_thread([&, t = b.get()] {
    try {
      out.reference = run_reference_session(ref_params, reference, *t, ref_opt, res);
    } catch (...) {
      ref_err = std::current_exception();
    }
    t->close();
  });
  std::exception_ptr owner_err;
  try {
    out.owner = run_owner_session(owner_params, owner, *a, owner_opt);
  } catch (...) {
    owner_err = std::current_exception();
  }
  a->close();
  ref_thread.join();
  if (owner_err) std::rethrow_exception(owner_err);
  if (ref_err) std::rethrow_exception(ref_err);
  return out;
}

inline PairResult run_pair(const SessionParams& p, const std::vector<HashedRecord>& owner,
                           const std::vector<HashedRecord>& reference) {
  return run_pair(p, owner, p, reference);
}

}  // namespace gazecheck::testing
