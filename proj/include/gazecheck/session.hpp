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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gazecheck/encode.hpp"
#include "gazecheck/group.hpp"
#include "gazecheck/psi.hpp"
#include "gazecheck/psi_dh.hpp"
#include "gazecheck/transport.hpp"

namespace gazecheck {

enum class ProtocolVersion : std::uint8_t { V0Public = 0, V1 = 1, V2 = 2, V3 = 3, V4 = 4 };

std::string to_string(ProtocolVersion v);
/// "v0".."v4"; VersionUnsupported otherwise.
ProtocolVersion parse_version(std::string_view s);

enum class ResultDelivery : std::uint8_t { OwnerOnly = 0, Both = 1 };

std::string to_string(ResultDelivery d);
ResultDelivery parse_result_delivery(std::string_view s);

/// Bits of security offered by a group.
unsigned security_bits(GroupId g);

struct SessionParams {
  ProtocolVersion version = ProtocolVersion::V1;
  Channel channel = Channel::Gaze;
  GroupId group = GroupId::P256;
  std::uint64_t lsh_seed = 0;
  std::uint16_t bits = 80;
  double gaze_tol_deg = 3.0;
  double pose_tol_deg = 5.0;
  std::uint16_t lift_features = 256;
  double bandwidth_deg = 6.0;
  std::uint16_t k_computational = 128;
  std::uint16_t sigma_statistical = 40;
  ResultDelivery result_delivery = ResultDelivery::OwnerOnly;
  bool reveal_correct_label = false;

  Bytes serialize() const;
  static SessionParams parse(ByteView b);
  EncodingMeta encoding() const;
  std::string describe() const;
  bool operator==(const SessionParams&) const = default;
};

enum class MsgType : std::uint8_t {
  Propose = 1,
  Accept = 2,
  Reject = 3,
  Setup = 4,
  Ready = 5,
  Msg1 = 6,
  Msg2 = 7,
  V4Blinded = 8,
  V4Response = 9,
  V4Report = 10,
  Result = 11,
  Abort = 12,
  PublicSet = 13,
};

inline constexpr std::uint8_t kChunkFlag = 0x80;
inline constexpr std::size_t kFrameHeaderSize = 10;
inline constexpr std::size_t kMaxFramePayload = std::size_t{64} << 20;

/// "QEYE" | version | msg_type (high bit: more chunks follow) | u32 BE length | payload.
struct Frame {
  std::uint8_t version = 0;
  MsgType type = MsgType::Abort;
  bool more = false;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

Bytes encode_frame(const Frame& f);
/// One complete frame; ProtocolError on bad magic, unknown type or length.
Frame decode_frame(ByteView bytes);

/// Frame I/O over a transport with chunking and abort handling.
class FrameChannel {
 public:
  FrameChannel(Transport& t, Millis timeout, std::size_t max_payload = kMaxFramePayload)
      : t_(&t), timeout_(timeout), max_payload_(max_payload) {}

  void send(std::uint8_t version, MsgType type, ByteView payload);
  void send_abort(std::uint8_t version, std::string_view reason);
  /// Next message, chunks reassembled. AbortReceived(reason) on an abort.
  Frame recv(std::string_view stage);
  /// recv() plus checks on version and type.
  Bytes expect(std::uint8_t version, MsgType type, std::string_view stage);

  Transport& transport() { return *t_; }

 private:
  /// Throws AbortReceived if the peer's Abort is waiting in the stream.
  void surface_pending_abort();

  Transport* t_;
  Millis timeout_;
  std::size_t max_payload_;
};

struct Policy {
  std::set<ProtocolVersion> versions{ProtocolVersion::V0Public, ProtocolVersion::V1,
                                     ProtocolVersion::V2, ProtocolVersion::V3, ProtocolVersion::V4};
  std::uint16_t min_k = 128;
  std::uint16_t min_sigma = 40;
  bool allow_reveal = true;
};

struct SessionOptions {
  Millis timeout{60000};
  std::size_t max_frame_payload = kMaxFramePayload;
  Policy policy;
  /// Owner reports only the compliant count, never compliant ids.
  bool collapse_compliant = false;
};

/// Initiator: sends the proposal; the result may only differ by raised k or sigma.
SessionParams negotiate_initiator(const SessionParams& proposal, FrameChannel& ch,
                                  const Policy& policy = {});
/// Responder: accepts a proposal equal to `local` up to k and sigma, which
/// are raised to the policy minimum. Mismatches send Reject and throw
/// ParamRejected(field) or VersionUnsupported.
SessionParams negotiate_responder(const SessionParams& local, FrameChannel& ch,
                                  const Policy& policy = {});

struct SessionTimings {
  double offline_ms = 0.0;
  double online_ms = 0.0;
};

struct OwnerResult {
  SessionParams params;
  PsiOutcome outcome;
  VerificationReport report;
  SessionTimings timings;
};

struct ReferenceResult {
  SessionParams params;
  std::optional<OutcomeSummary> delivered;
  std::size_t matched_bins = 0;
  SessionTimings timings;
};

/// V3 material prepared ahead of time.
struct ReferenceResources {
  const PublishedReferenceSet* published = nullptr;
  const DhReferenceKeys* published_keys = nullptr;
};

/// Owner role: negotiates, runs the negotiated version over `owner` (encoded
/// with the proposal's parameters) and builds the report.
OwnerResult run_owner_session(const SessionParams& proposal, const std::vector<HashedRecord>& owner,
                              Transport& t, const SessionOptions& opt = {});

ReferenceResult run_reference_session(const SessionParams& local,
                                      const std::vector<HashedRecord>& reference, Transport& t,
                                      const SessionOptions& opt = {},
                                      const ReferenceResources& res = {});

/// Accepts connections and runs one reference session per connection on its
/// own thread. Returns after `max_sessions` sessions (0: until `stop`).
void serve(TcpListener& listener, const SessionParams& local,
           const std::vector<HashedRecord>& reference, const SessionOptions& opt,
           const ReferenceResources& res, std::size_t max_sessions, std::atomic<bool>* stop = nullptr);

}  // namespace gazecheck
