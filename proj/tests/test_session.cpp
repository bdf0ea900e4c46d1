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

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "gazecheck/error.hpp"
#include "gazecheck/session.hpp"
#include "support.hpp"

using namespace gazecheck;
using gazecheck::testing::make_scenario;
using gazecheck::testing::run_pair;

namespace {

template <typename F>
ErrorCode code_of(F&& f, std::string* detail = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

SessionParams base_params(ProtocolVersion v) {
  SessionParams p;
  p.version = v;
  p.lsh_seed = 99;
  return p;
}

}  // namespace

TEST(Frame, RoundTripAndHeaderLayout) {
  Frame f{3, MsgType::Msg2, false, {1, 2, 3}};
  Bytes enc = encode_frame(f);
  ASSERT_EQ(enc.size(), kFrameHeaderSize + 3);
  EXPECT_EQ(std::string(enc.begin(), enc.begin() + 4), "QEYE");
  EXPECT_EQ(enc[4], 3);
  EXPECT_EQ(enc[5], static_cast<std::uint8_t>(MsgType::Msg2));
  EXPECT_EQ(enc[9], 3);
  Frame back = decode_frame(enc);
  EXPECT_EQ(back.version, 3);
  EXPECT_EQ(back.type, MsgType::Msg2);
  EXPECT_EQ(back.payload, f.payload);

  Bytes bad = enc;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_frame(bad); }), ErrorCode::ProtocolError);
  bad = enc;
  bad[5] = 0x7f;
  EXPECT_EQ(code_of([&] { decode_frame(bad); }), ErrorCode::ProtocolError);
  bad = enc;
  bad.pop_back();
  EXPECT_EQ(code_of([&] { decode_frame(bad); }), ErrorCode::ProtocolError);
}

TEST(Frame, LargePayloadIsChunkedAndReassembled) {
  auto [a, b] = make_duplex();
  FrameChannel tx(*a, Millis(2000), 7);
  FrameChannel rx(*b, Millis(2000), 7);
  Bytes payload(50);
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i);
  tx.send(1, MsgType::Msg1, payload);
  EXPECT_EQ(a->bytes_sent(), 50u + 8u * kFrameHeaderSize);
  EXPECT_EQ(rx.expect(1, MsgType::Msg1, "t"), payload);
}

TEST(Frame, OversizedFrameIsRejected) {
  auto [a, b] = make_duplex();
  FrameChannel tx(*a, Millis(2000), 1000);
  FrameChannel rx(*b, Millis(2000), 16);
  tx.send(1, MsgType::Msg1, Bytes(100, 0));
  EXPECT_EQ(code_of([&] { rx.recv("t"); }), ErrorCode::ProtocolError);
}

TEST(Frame, WrongVersionByteIsRejected) {
  auto [a, b] = make_duplex();
  FrameChannel tx(*a, Millis(2000));
  FrameChannel rx(*b, Millis(2000));
  tx.send(1, MsgType::Setup, Bytes{});
  EXPECT_EQ(code_of([&] { rx.expect(2, MsgType::Setup, "setup"); }), ErrorCode::ProtocolError);
}

TEST(Frame, AbortCarriesReason) {
  auto [a, b] = make_duplex();
  FrameChannel tx(*a, Millis(2000));
  FrameChannel rx(*b, Millis(2000));
  tx.send_abort(4, "disk full");
  std::string detail;
  EXPECT_EQ(code_of([&] { rx.expect(1, MsgType::Msg1, "x"); }, &detail), ErrorCode::AbortReceived);
  EXPECT_EQ(detail, "disk full");
}

TEST(SessionParams, SerializeRoundTrip) {
  SessionParams p = base_params(ProtocolVersion::V4);
  p.channel = Channel::Both;
  p.group = GroupId::Modp3072;
  p.bits = 96;
  p.gaze_tol_deg = 2.5;
  p.result_delivery = ResultDelivery::Both;
  p.reveal_correct_label = true;
  EXPECT_EQ(SessionParams::parse(p.serialize()), p);
  EXPECT_EQ(parse_version("v3"), ProtocolVersion::V3);
  EXPECT_EQ(code_of([] { parse_version("v9"); }), ErrorCode::VersionUnsupported);
}

TEST(Negotiation, MismatchedFieldIsNamed) {
  auto s = make_scenario(32, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 1);
  SessionParams owner = s.params, ref = s.params;
  ref.bits = 64;
  std::string detail;
  EXPECT_EQ(code_of([&] { run_pair(owner, s.owner_hashed, ref, s.ref_hashed); }, &detail),
            ErrorCode::ParamRejected);
  EXPECT_EQ(detail, "bits");
}

TEST(Negotiation, UnsupportedVersion) {
  auto s = make_scenario(32, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 2,
                         ProtocolVersion::V2);
  SessionOptions ref_opt;
  ref_opt.policy.versions = {ProtocolVersion::V1};
  EXPECT_EQ(code_of([&] { run_pair(s.params, s.owner_hashed, s.params, s.ref_hashed, {}, ref_opt); }),
            ErrorCode::VersionUnsupported);
}

TEST(Negotiation, SecurityParametersAreRaisedToPolicyMinimum) {
  auto s = make_scenario(32, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 3);
  SessionOptions owner_opt, ref_opt;
  owner_opt.policy.min_k = 96;
  s.params.k_computational = 112;
  ref_opt.policy.min_sigma = 64;
  auto r = run_pair(s.params, s.owner_hashed, s.params, s.ref_hashed, owner_opt, ref_opt);
  EXPECT_EQ(r.owner.params.k_computational, 128);
  EXPECT_EQ(r.owner.params.sigma_statistical, 64);
  EXPECT_EQ(r.reference.params, r.owner.params);
}

TEST(Negotiation, SecurityBeyondGroupIsRejected) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 4);
  s.params.k_computational = 192;
  std::string detail;
  EXPECT_EQ(code_of([&] { run_pair(s.params, s.owner_hashed, s.ref_hashed); }, &detail),
            ErrorCode::ParamRejected);
  EXPECT_EQ(detail, "k_computational");
}

TEST(Negotiation, RevealNeedsPolicyConsent) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 5);
  s.params.reveal_correct_label = true;
  SessionOptions ref_opt;
  ref_opt.policy.allow_reveal = false;
  std::string detail;
  EXPECT_EQ(code_of([&] { run_pair(s.params, s.owner_hashed, s.params, s.ref_hashed, {}, ref_opt); },
                    &detail),
            ErrorCode::ParamRejected);
  EXPECT_EQ(detail, "reveal_correct_label");
}

TEST(Session, AllVersionsAgree) {
  auto s = make_scenario(96, 0.5, 0.2, CorruptionMode::LabelNoise, Channel::Both, 11);
  std::optional<VerificationReport> plain;
  for (auto v : {ProtocolVersion::V0Public, ProtocolVersion::V1, ProtocolVersion::V2,
                 ProtocolVersion::V3, ProtocolVersion::V4}) {
    SessionParams p = s.params;
    p.version = v;
    auto r = run_pair(p, s.owner_hashed, s.ref_hashed);
    if (!plain) {
      plain = r.owner.report;
      EXPECT_EQ(plain->matched_elements, 48u);
      EXPECT_GT(plain->non_compliant_cardinality, 0u);
      continue;
    }
    SCOPED_TRACE(to_string(v));
    EXPECT_EQ(r.owner.outcome.match_count, plain->matched_elements);
    EXPECT_EQ(r.owner.report.compliant_cardinality, plain->compliant_cardinality);
    EXPECT_EQ(r.owner.report.non_compliant_cardinality, plain->non_compliant_cardinality);
    if (v != ProtocolVersion::V2) {
      EXPECT_EQ(r.owner.report.mismatched_ids, plain->mismatched_ids);
      EXPECT_EQ(r.owner.report.compliant_ids, plain->compliant_ids);
    } else {
      EXPECT_TRUE(r.owner.report.cardinality_only);
      EXPECT_TRUE(r.owner.report.mismatched_ids.empty());
    }
  }
}

TEST(Session, ResultDeliveredToReferenceWhenAgreed) {
  auto s = make_scenario(48, 0.5, 0.1, CorruptionMode::LabelNoise, Channel::Gaze, 12);
  s.params.result_delivery = ResultDelivery::Both;
  auto r = run_pair(s.params, s.owner_hashed, s.ref_hashed);
  ASSERT_TRUE(r.reference.delivered);
  EXPECT_EQ(*r.reference.delivered, summarize(r.owner.outcome));

  s.params.result_delivery = ResultDelivery::OwnerOnly;
  EXPECT_FALSE(run_pair(s.params, s.owner_hashed, s.ref_hashed).reference.delivered);
}

TEST(Session, PrecomputedPublishedSetIsUsed) {
  auto s = make_scenario(48, 0.5, 0.1, CorruptionMode::LabelNoise, Channel::Gaze, 13,
                         ProtocolVersion::V3);
  const Group& g = group_for(s.params.group);
  auto keys = make_reference_keys(g);
  auto pub = publish_reference(dedup(s.ref_hashed).unique, keys, g, s.params.channel);
  ReferenceResources res{&pub, &keys};
  auto r = run_pair(s.params, s.owner_hashed, s.params, s.ref_hashed, {}, {}, res);
  SessionParams p1 = s.params;
  p1.version = ProtocolVersion::V1;
  auto r1 = run_pair(p1, s.owner_hashed, s.ref_hashed);
  EXPECT_EQ(r.owner.report.mismatched_ids, r1.owner.report.mismatched_ids);

  pub.bits = 64;
  EXPECT_EQ(code_of([&] { run_pair(s.params, s.owner_hashed, s.params, s.ref_hashed, {}, {}, res); }),
            ErrorCode::AbortReceived);
}

TEST(Session, EmptyReferenceAbortsOwner) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 14);
  std::string detail;
  EXPECT_EQ(code_of([&] { run_pair(s.params, s.owner_hashed, s.params, {}); }, &detail),
            ErrorCode::AbortReceived);
  EXPECT_NE(detail.find("EmptyReference"), std::string::npos) << detail;
}

TEST(Session, SilentPeerTimesOutWithStage) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 15);
  auto [a, b] = make_duplex();
  SessionOptions opt;
  opt.timeout = Millis(200);
  std::string detail;
  EXPECT_EQ(code_of([&, t = a.get()] { run_owner_session(s.params, s.owner_hashed, *t, opt); }, &detail),
            ErrorCode::Timeout);
  EXPECT_EQ(detail, "negotiate");
}

TEST(Session, StallAfterNegotiationTimesOutInLaterStage) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 16);
  auto [a, b] = make_duplex();
  std::thread peer([&, t = b.get()] {
    FrameChannel ch(*t, Millis(2000));
    try {
      negotiate_responder(s.params, ch, {});
      ch.recv("setup");
      ch.recv("hold");  // never sends Ready
    } catch (const Error&) {
    }
  });
  SessionOptions opt;
  opt.timeout = Millis(300);
  std::string detail;
  EXPECT_EQ(code_of([&, t = a.get()] { run_owner_session(s.params, s.owner_hashed, *t, opt); }, &detail),
            ErrorCode::Timeout);
  EXPECT_EQ(detail, "offline");
  peer.join();
}

TEST(Session, ClosedPeerIsTransportError) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 17);
  auto [a, b] = make_duplex();
  b->close();
  EXPECT_EQ(code_of([&, t = a.get()] { run_owner_session(s.params, s.owner_hashed, *t); }),
            ErrorCode::TransportError);
}

TEST(Session, ShuffledResponderRefusesUnshuffledFrames) {
  auto s = make_scenario(16, 0.5, 0.0, CorruptionMode::LabelNoise, Channel::Gaze, 18,
                         ProtocolVersion::V2);
  auto [a, b] = make_duplex();
  std::optional<ErrorCode> ref_code;
  std::thread ref([&, t = b.get()] {
    try {
      run_reference_session(s.params, s.ref_hashed, *t, {});
    } catch (const Error& e) {
      ref_code = e.code();
    }
  });
  FrameChannel ch(*a, Millis(5000));
  negotiate_initiator(s.params, ch, {});
  // A V1-tagged setup frame inside a V2 session.
  ch.send(1, MsgType::Setup, Bytes{});
  EXPECT_EQ(code_of([&] { ch.recv("after"); }), ErrorCode::AbortReceived);
  ref.join();
  EXPECT_EQ(ref_code, ErrorCode::ProtocolError);
}

TEST(Session, TcpMatchesInProcess) {
  auto s = make_scenario(64, 0.5, 0.2, CorruptionMode::LabelNoise, Channel::Gaze, 19);
  TcpListener listener("127.0.0.1", 0);
  std::thread server([&] { serve(listener, s.params, s.ref_hashed, {}, {}, 1, nullptr); });
  auto conn = tcp_connect("127.0.0.1", listener.port());
  auto tcp = run_owner_session(s.params, s.owner_hashed, *conn);
  conn->close();
  server.join();
  auto local = run_pair(s.params, s.owner_hashed, s.ref_hashed);
  EXPECT_EQ(tcp.report.mismatched_ids, local.owner.report.mismatched_ids);
  EXPECT_EQ(tcp.report.compliant_ids, local.owner.report.compliant_ids);
  EXPECT_EQ(tcp.outcome.match_count, 32u);
}

TEST(Session, ServeStopsOnFlag) {
  TcpListener listener("127.0.0.1", 0);
  std::atomic<bool> stop{false};
  std::thread server([&] { serve(listener, SessionParams{}, {}, {}, {}, 0, &stop); });
  stop = true;
  server.join();
  SUCCEED();
}
