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

#include "gazecheck/session.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

#include "gazecheck/crypto.hpp"
#include "gazecheck/log.hpp"
#include "gazecheck/psi_oprf.hpp"
#include "gazecheck/verify.hpp"

namespace gazecheck {

namespace {

constexpr std::string_view kFrameMagic = "QEYE";

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

bool known_type(std::uint8_t t) { return t >= 1 && t <= 13; }

std::string type_name(MsgType t) {
  switch (t) {
    case MsgType::Propose: return "propose";
    case MsgType::Accept: return "accept";
    case MsgType::Reject: return "reject";
    case MsgType::Setup: return "setup";
    case MsgType::Ready: return "ready";
    case MsgType::Msg1: return "msg1";
    case MsgType::Msg2: return "msg2";
    case MsgType::V4Blinded: return "v4-blinded";
    case MsgType::V4Response: return "v4-response";
    case MsgType::V4Report: return "v4-report";
    case MsgType::Result: return "result";
    case MsgType::Abort: return "abort";
    case MsgType::PublicSet: return "public-set";
  }
  return "unknown";
}

bool transport_level(ErrorCode c) {
  return c == ErrorCode::Timeout || c == ErrorCode::TransportError || c == ErrorCode::AbortReceived;
}

struct Setup {
  Bytes nonce;
  Bytes payload_pk;
  Bytes oprf_pk;

  Bytes serialize() const {
    ByteWriter w;
    w.blob(nonce);
    w.blob(payload_pk);
    w.blob(oprf_pk);
    return std::move(w).take();
  }
  static Setup parse(ByteView b) {
    ByteReader r(b);
    Setup s{r.blob(), r.blob(), r.blob()};
    r.expect_done();
    if (s.nonce.size() != kSessionNonceSize) fail(ErrorCode::TranscriptMalformed, "setup nonce");
    return s;
  }
};

/// One entry per (digest, label set) the reference keeps for that digest.
Bytes serialize_public_set(const DedupResult& d) {
  ByteWriter w;
  std::uint32_t n = 0;
  for (const auto& l : d.labels) n += static_cast<std::uint32_t>(l.size());
  w.u32(n);
  for (std::size_t k = 0; k < d.unique.size(); ++k) {
    for (const auto& l : d.labels[k]) {
      w.blob(d.unique[k].digest.bytes());
      w.raw(encode_label_block(l));
    }
  }
  return std::move(w).take();
}

std::vector<HashedRecord> parse_public_set(ByteView b, std::size_t bits) {
  ByteReader r(b);
  const std::uint32_t n = r.u32();
  std::vector<HashedRecord> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    HashedRecord h;
    h.sample_id = "ref" + std::to_string(i);
    h.digest = Digest(bits, r.blob());
    auto raw = r.raw(kLabelBlockSize);
    LabelBlock blk{};
    std::copy(raw.begin(), raw.end(), blk.begin());
    LabelSet ls = decode_label_block(blk);
    h.gaze = ls.gaze;
    h.pose = ls.pose;
    out.push_back(std::move(h));
  }
  r.expect_done();
  return out;
}

/// Runs `body`; on failure tells the peer (unless it already knows) and
/// prefixes the stage to errors raised after negotiation.
template <typename F>
void guarded(FrameChannel& ch, std::uint8_t version, const std::string& stage, bool& peer_knows,
             F&& body) {
  try {
    body();
  } catch (const Error& e) {
    if (!peer_knows && e.code() != ErrorCode::AbortReceived && e.code() != ErrorCode::TransportError) {
      try {
        ch.send_abort(version, e.what());
      } catch (const Error&) {
      }
    }
    if (stage == "negotiate" || transport_level(e.code())) throw;
    fail(e.code(), stage + ": " + e.detail());
  }
}

}  // namespace

std::string to_string(ProtocolVersion v) { return "v" + std::to_string(static_cast<int>(v)); }

ProtocolVersion parse_version(std::string_view s) {
  if (s.size() == 2 && (s[0] == 'v' || s[0] == 'V') && s[1] >= '0' && s[1] <= '4') {
    return static_cast<ProtocolVersion>(s[1] - '0');
  }
  fail(ErrorCode::VersionUnsupported, std::string(s));
}

std::string to_string(ResultDelivery d) { return d == ResultDelivery::Both ? "both" : "owner"; }

ResultDelivery parse_result_delivery(std::string_view s) {
  if (s == "owner") return ResultDelivery::OwnerOnly;
  if (s == "both") return ResultDelivery::Both;
  fail(ErrorCode::InvalidArgument, "result delivery " + std::string(s));
}

unsigned security_bits(GroupId g) {
  switch (g) {
    case GroupId::P256: return 128;
    case GroupId::Modp3072: return 128;
  }
  return 0;
}

Bytes SessionParams::serialize() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(version));
  w.u8(static_cast<std::uint8_t>(channel));
  w.u8(static_cast<std::uint8_t>(group));
  w.u64(lsh_seed);
  w.u16(bits);
  w.f64(gaze_tol_deg);
  w.f64(pose_tol_deg);
  w.u16(lift_features);
  w.f64(bandwidth_deg);
  w.u16(k_computational);
  w.u16(sigma_statistical);
  w.u8(static_cast<std::uint8_t>(result_delivery));
  w.u8(reveal_correct_label ? 1 : 0);
  return std::move(w).take();
}

SessionParams SessionParams::parse(ByteView b) {
  ByteReader r(b);
  SessionParams p;
  const auto v = r.u8();
  if (v > 4) fail(ErrorCode::VersionUnsupported, "version byte " + std::to_string(v));
  p.version = static_cast<ProtocolVersion>(v);
  const auto ch = r.u8();
  if (ch > 2) fail(ErrorCode::TranscriptMalformed, "channel");
  p.channel = static_cast<Channel>(ch);
  p.group = group_id_from_byte(r.u8());
  p.lsh_seed = r.u64();
  p.bits = r.u16();
  p.gaze_tol_deg = r.f64();
  p.pose_tol_deg = r.f64();
  p.lift_features = r.u16();
  p.bandwidth_deg = r.f64();
  p.k_computational = r.u16();
  p.sigma_statistical = r.u16();
  const auto d = r.u8();
  if (d > 1) fail(ErrorCode::TranscriptMalformed, "result delivery");
  p.result_delivery = static_cast<ResultDelivery>(d);
  const auto rv = r.u8();
  if (rv > 1) fail(ErrorCode::TranscriptMalformed, "reveal flag");
  p.reveal_correct_label = rv == 1;
  r.expect_done();
  return p;
}

EncodingMeta SessionParams::encoding() const {
  EncodingMeta m;
  m.lsh.seed = lsh_seed;
  m.lsh.bits = bits;
  m.lsh.lift_features = lift_features;
  m.lsh.bandwidth_deg = bandwidth_deg;
  m.channel = channel;
  m.tolerances.gaze_tol_deg = gaze_tol_deg;
  m.tolerances.pose_tol_deg = pose_tol_deg;
  return m;
}

std::string SessionParams::describe() const {
  std::ostringstream s;
  s << "version=" << to_string(version) << " channel=" << to_string(channel)
    << " group=" << to_string(group) << " lsh_seed=" << lsh_seed << " bits=" << bits
    << " gaze_tol=" << gaze_tol_deg << " pose_tol=" << pose_tol_deg
    << " lift_features=" << lift_features << " bandwidth=" << bandwidth_deg
    << " k=" << k_computational << " sigma=" << sigma_statistical
    << " delivery=" << to_string(result_delivery)
    << " reveal=" << (reveal_correct_label ? "on" : "off");
  return s.str();
}

Bytes encode_frame(const Frame& f) {
  if (f.payload.size() > 0xffffffffu) fail(ErrorCode::ProtocolError, "frame too large");
  ByteWriter w;
  w.raw(as_bytes(kFrameMagic));
  w.u8(f.version);
  w.u8(static_cast<std::uint8_t>(static_cast<std::uint8_t>(f.type) | (f.more ? kChunkFlag : 0)));
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.raw(f.payload);
  return std::move(w).take();
}

Frame decode_frame(ByteView bytes) {
  if (bytes.size() < kFrameHeaderSize) fail(ErrorCode::ProtocolError, "short frame");
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin())) {
    fail(ErrorCode::ProtocolError, "bad magic");
  }
  ByteReader r(bytes.subspan(4));
  Frame f;
  f.version = r.u8();
  const auto t = r.u8();
  if (!known_type(t & ~kChunkFlag)) fail(ErrorCode::ProtocolError, "unknown msg_type " + std::to_string(t));
  f.type = static_cast<MsgType>(t & ~kChunkFlag);
  f.more = (t & kChunkFlag) != 0;
  const auto len = r.u32();
  if (r.remaining() != len) fail(ErrorCode::ProtocolError, "payload_len mismatch");
  auto p = r.raw(len);
  f.payload.assign(p.begin(), p.end());
  return f;
}

void FrameChannel::send(std::uint8_t version, MsgType type, ByteView payload) {
  std::size_t off = 0;
  do {
    const std::size_t n = std::min(max_payload_, payload.size() - off);
    Frame f{version, type, off + n < payload.size(), Bytes(payload.begin() + off, payload.begin() + off + n)};
    try {
      t_->write(encode_frame(f));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      surface_pending_abort();
      throw;
    }
    off += n;
  } while (off < payload.size());
  log(LogLevel::Debug, "sent " + type_name(type) + " (" + std::to_string(payload.size()) + " bytes)");
}

void FrameChannel::surface_pending_abort() {
  // A peer that aborted and closed may have left its Abort unread.
  const Millis saved = timeout_;
  timeout_ = Millis(200);
  try {
    for (;;) recv("pending abort");
  } catch (const Error& e) {
    timeout_ = saved;
    if (e.code() == ErrorCode::AbortReceived) throw;
  }
}

void FrameChannel::send_abort(std::uint8_t version, std::string_view reason) {
  send(version, MsgType::Abort, as_bytes(reason));
}

Frame FrameChannel::recv(std::string_view stage) {
  Frame out;
  bool first = true;
  for (;;) {
    Bytes hdr = t_->read_exact(kFrameHeaderSize, timeout_, stage);
    if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), hdr.begin())) {
      fail(ErrorCode::ProtocolError, std::string(stage) + ": bad magic");
    }
    const std::uint8_t version = hdr[4];
    const std::uint8_t t = hdr[5];
    if (!known_type(t & ~kChunkFlag)) {
      fail(ErrorCode::ProtocolError, std::string(stage) + ": unknown msg_type " + std::to_string(t));
    }
    const std::uint32_t len = (std::uint32_t(hdr[6]) << 24) | (std::uint32_t(hdr[7]) << 16) |
                              (std::uint32_t(hdr[8]) << 8) | hdr[9];
    if (len > max_payload_) fail(ErrorCode::ProtocolError, std::string(stage) + ": frame exceeds maximum");
    Bytes payload = t_->read_exact(len, timeout_, stage);
    const auto type = static_cast<MsgType>(t & ~kChunkFlag);
    if (type == MsgType::Abort) {
      fail(ErrorCode::AbortReceived, std::string(payload.begin(), payload.end()));
    }
    if (first) {
      out.version = version;
      out.type = type;
      first = false;
    } else if (type != out.type || version != out.version) {
      fail(ErrorCode::ProtocolError, std::string(stage) + ": interleaved chunk");
    }
    out.payload.insert(out.payload.end(), payload.begin(), payload.end());
    if (!(t & kChunkFlag)) break;
  }
  log(LogLevel::Debug, "received " + type_name(out.type) + " (" + std::to_string(out.payload.size()) + " bytes)");
  return out;
}

Bytes FrameChannel::expect(std::uint8_t version, MsgType type, std::string_view stage) {
  Frame f = recv(stage);
  if (f.type != type) {
    fail(ErrorCode::ProtocolError,
         std::string(stage) + ": expected " + type_name(type) + ", got " + type_name(f.type));
  }
  if (f.version != version) {
    fail(ErrorCode::ProtocolError, std::string(stage) + ": frame version " + std::to_string(f.version) +
                                       " in a v" + std::to_string(version) + " session");
  }
  return std::move(f.payload);
}

namespace {

std::optional<std::string> first_mismatch(const SessionParams& a, const SessionParams& b) {
  if (a.channel != b.channel) return "channel";
  if (a.group != b.group) return "group_id";
  if (a.lsh_seed != b.lsh_seed) return "lsh_seed";
  if (a.bits != b.bits) return "bits";
  if (a.gaze_tol_deg != b.gaze_tol_deg) return "gaze_tol_deg";
  if (a.pose_tol_deg != b.pose_tol_deg) return "pose_tol_deg";
  if (a.lift_features != b.lift_features) return "lift_features";
  if (a.bandwidth_deg != b.bandwidth_deg) return "bandwidth_deg";
  if (a.result_delivery != b.result_delivery) return "result_delivery";
  return std::nullopt;
}

void check_security(const SessionParams& p, const Policy& policy) {
  if (p.k_computational < policy.min_k || p.k_computational > security_bits(p.group)) {
    fail(ErrorCode::ParamRejected, "k_computational");
  }
  if (p.sigma_statistical < policy.min_sigma || p.bits + p.sigma_statistical > 256) {
    fail(ErrorCode::ParamRejected, "sigma_statistical");
  }
}

}  // namespace

SessionParams negotiate_initiator(const SessionParams& proposal, FrameChannel& ch, const Policy& policy) {
  check_security(proposal, policy);
  const auto v = static_cast<std::uint8_t>(proposal.version);
  ch.send(v, MsgType::Propose, proposal.serialize());
  Frame f = ch.recv("negotiate");
  if (f.type == MsgType::Reject) {
    ByteReader r(f.payload);
    const auto code = static_cast<ErrorCode>(r.u8());
    std::string detail = r.str();
    if (code == ErrorCode::VersionUnsupported) fail(ErrorCode::VersionUnsupported, detail);
    fail(ErrorCode::ParamRejected, detail);
  }
  if (f.type != MsgType::Accept) fail(ErrorCode::ProtocolError, "negotiate: expected accept");
  SessionParams agreed = SessionParams::parse(f.payload);
  auto reject = [&](const std::string& field) {
    ch.send_abort(v, "ParamRejected(" + field + ")");
    fail(ErrorCode::ParamRejected, field);
  };
  if (agreed.version != proposal.version) reject("version");
  if (auto m = first_mismatch(agreed, proposal)) reject(*m);
  if (agreed.reveal_correct_label != proposal.reveal_correct_label) reject("reveal_correct_label");
  if (agreed.k_computational < proposal.k_computational) reject("k_computational");
  if (agreed.sigma_statistical < proposal.sigma_statistical) reject("sigma_statistical");
  try {
    check_security(agreed, policy);
  } catch (const Error& e) {
    reject(e.detail());
  }
  return agreed;
}

SessionParams negotiate_responder(const SessionParams& local, FrameChannel& ch, const Policy& policy) {
  Frame f = ch.recv("negotiate");
  if (f.type != MsgType::Propose) fail(ErrorCode::ProtocolError, "negotiate: expected propose");
  auto reject = [&](ErrorCode code, const std::string& detail) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(code));
    w.str(detail);
    ch.send(f.version, MsgType::Reject, w.bytes());
    fail(code, detail);
  };
  SessionParams p;
  try {
    p = SessionParams::parse(f.payload);
  } catch (const Error& e) {
    reject(e.code() == ErrorCode::VersionUnsupported ? ErrorCode::VersionUnsupported
                                                     : ErrorCode::ParamRejected,
           e.detail());
  }
  if (!policy.versions.count(p.version) || f.version != static_cast<std::uint8_t>(p.version)) {
    reject(ErrorCode::VersionUnsupported, to_string(p.version));
  }
  if (auto m = first_mismatch(p, local)) reject(ErrorCode::ParamRejected, *m);
  if (p.reveal_correct_label && !policy.allow_reveal) {
    reject(ErrorCode::ParamRejected, "reveal_correct_label");
  }
  p.k_computational = std::max(p.k_computational, policy.min_k);
  p.sigma_statistical = std::max(p.sigma_statistical, policy.min_sigma);
  try {
    check_security(p, policy);
  } catch (const Error& e) {
    reject(ErrorCode::ParamRejected, e.detail());
  }
  ch.send(f.version, MsgType::Accept, p.serialize());
  return p;
}

OwnerResult run_owner_session(const SessionParams& proposal, const std::vector<HashedRecord>& owner,
                              Transport& t, const SessionOptions& opt) {
  FrameChannel ch(t, opt.timeout, opt.max_frame_payload);
  OwnerResult res;
  std::string stage = "negotiate";
  bool peer_knows = false;
  const std::uint8_t v = static_cast<std::uint8_t>(proposal.version);

  res.params = negotiate_initiator(proposal, ch, opt.policy);
  log(LogLevel::Info, "owner negotiated " + res.params.describe());
  const SessionParams& p = res.params;
  const Group& g = group_for(p.group);
  const DedupResult d = dedup(owner);
  VerdictOptions vo{p.channel, p.reveal_correct_label, opt.collapse_compliant};

  guarded(ch, v, stage, peer_knows, [&] {
    auto t0 = Clock::now();
    if (p.version == ProtocolVersion::V0Public) {
      stage = "public-set";
      auto refs = parse_public_set(ch.expect(v, MsgType::PublicSet, stage), p.bits);
      auto t1 = Clock::now();
      res.report = verify_public(owner, refs, p.channel);
      res.outcome.mode = OutcomeMode::ExactMatches;
      res.outcome.match_count = res.report.matched_elements;
      res.outcome.compliant_count = res.report.compliant_cardinality;
      res.outcome.non_compliant_count = res.report.non_compliant_cardinality;
      res.timings.offline_ms = ms_between(t0, t1);
      res.timings.online_ms = ms_between(t1, Clock::now());
    } else {
      stage = "setup";
      const Bytes nonce = random_bytes(kSessionNonceSize);
      std::optional<DhOwnerKeys> keys;
      std::optional<V4Owner> v4;
      Setup setup{nonce, {}, {}};
      if (p.version == ProtocolVersion::V4) {
        v4.emplace(g, d.unique, nonce, vo);
        v4->prepare_offline();
        setup.payload_pk = v4->payload_public_key();
        setup.oprf_pk = v4->oprf_public_key();
      } else {
        keys.emplace(make_owner_keys(g));
        setup.payload_pk = keys->payload.pk;
      }
      ch.send(v, MsgType::Setup, setup.serialize());
      stage = "offline";
      ch.expect(v, MsgType::Ready, stage);
      auto t1 = Clock::now();
      res.timings.offline_ms = ms_between(t0, t1);

      if (p.version == ProtocolVersion::V4) {
        stage = "v4-blinded";
        auto m = V4BlindedMsg::parse(ch.expect(v, MsgType::V4Blinded, stage), g);
        if (m.output_bytes != prf_output_bytes(p.bits, p.sigma_statistical)) {
          fail(ErrorCode::TranscriptMalformed, "prf output width");
        }
        ch.send(v, MsgType::V4Response, v4->respond(m).serialize());
        stage = "v4-report";
        res.outcome = v4->finalize(V4MatchReport::parse(ch.expect(v, MsgType::V4Report, stage), g));
      } else {
        stage = "round1";
        const bool shuffled = p.version == ProtocolVersion::V2;
        Msg1 m1 = owner_round1(d.unique, keys->k, g, {nonce, shuffled});
        ch.send(v, MsgType::Msg1, m1.serialize());
        stage = "round2";
        Msg2 m2 = Msg2::parse(ch.expect(v, MsgType::Msg2, stage), g);
        if (p.version == ProtocolVersion::V3 && m2.tokens.empty() && !m2.b.empty()) {
          fail(ErrorCode::ModeMismatch, "expected published-set response");
        }
        stage = "finalize";
        res.outcome = owner_finalize(m2, *keys, d.unique, g, m1, {shuffled, vo});
      }
      res.report = report_from_outcome(res.outcome, owner, d, p.channel, opt.collapse_compliant);
      res.timings.online_ms = ms_between(t1, Clock::now());
    }
    if (p.result_delivery == ResultDelivery::Both) {
      stage = "result";
      ch.send(v, MsgType::Result, summarize(res.outcome).serialize());
    }
  });
  log(LogLevel::Info, "owner outcome: matches " + std::to_string(res.outcome.match_count) +
                          ", compliant " + std::to_string(res.outcome.compliant_count) +
                          ", non-compliant " + std::to_string(res.outcome.non_compliant_count));
  return res;
}

ReferenceResult run_reference_session(const SessionParams& local,
                                      const std::vector<HashedRecord>& reference, Transport& t,
                                      const SessionOptions& opt, const ReferenceResources& resources) {
  FrameChannel ch(t, opt.timeout, opt.max_frame_payload);
  ReferenceResult res;
  std::string stage = "negotiate";
  bool peer_knows = false;
  res.params = negotiate_responder(local, ch, opt.policy);
  log(LogLevel::Info, "reference negotiated " + res.params.describe());
  const SessionParams& p = res.params;
  const std::uint8_t v = static_cast<std::uint8_t>(p.version);
  const Group& g = group_for(p.group);

  guarded(ch, v, stage, peer_knows, [&] {
    const DedupResult d = dedup(reference);
    if (d.unique.empty()) fail(ErrorCode::EmptyReference);
    auto t0 = Clock::now();
    if (p.version == ProtocolVersion::V0Public) {
      stage = "public-set";
      ch.send(v, MsgType::PublicSet, serialize_public_set(d));
      res.timings.online_ms = ms_between(t0, Clock::now());
    } else {
      stage = "setup";
      const Setup setup = Setup::parse(ch.expect(v, MsgType::Setup, stage));
      stage = "offline";
      std::optional<DhReferenceKeys> keys;
      std::optional<V4Reference> v4;
      PublishedReferenceSet local_pub;
      const PublishedReferenceSet* pub = resources.published;
      const DhReferenceKeys* pub_keys = resources.published_keys;
      switch (p.version) {
        // V1 and V2 answer entirely online: B and the payloads are computed
        // once Msg1 arrives. Only V3 and V4 move reference-side work offline.
        case ProtocolVersion::V1:
        case ProtocolVersion::V2:
          keys.emplace(make_reference_keys(g));
          break;
        case ProtocolVersion::V3:
          if (!pub || !pub_keys) {
            keys.emplace(make_reference_keys(g));
            local_pub = publish_reference(reference, *keys, g, p.channel);
            pub = &local_pub;
            pub_keys = &*keys;
          }
          if (pub->group != p.group || pub->bits != p.bits || pub->channel != p.channel) {
            fail(ErrorCode::VersionMismatch, "published set does not match session parameters");
          }
          break;
        case ProtocolVersion::V4: {
          CuckooParams cp;
          cp.output_bytes = prf_output_bytes(p.bits, p.sigma_statistical);
          v4.emplace(g, reference, cp, setup.nonce);
          v4->prepare_offline(setup.oprf_pk, setup.payload_pk);
          break;
        }
        case ProtocolVersion::V0Public: break;
      }
      ch.send(v, MsgType::Ready, {});
      auto t1 = Clock::now();
      res.timings.offline_ms = ms_between(t0, t1);

      if (p.version == ProtocolVersion::V4) {
        stage = "v4-blinded";
        ch.send(v, MsgType::V4Blinded, v4->blinded_message().serialize());
        stage = "v4-response";
        auto resp = V4ResponseMsg::parse(ch.expect(v, MsgType::V4Response, stage), g,
                                         prf_output_bytes(p.bits, p.sigma_statistical));
        ch.send(v, MsgType::V4Report, v4->match(resp).serialize());
        res.matched_bins = v4->matched_bins();
      } else {
        stage = "round1";
        Msg1 m1 = Msg1::parse(ch.expect(v, MsgType::Msg1, stage));
        if (m1.session_nonce != setup.nonce) fail(ErrorCode::TranscriptMalformed, "session nonce");
        stage = "round2";
        Msg2 m2;
        if (p.version == ProtocolVersion::V3) {
          m2 = v3_online(m1, *pub, *pub_keys, g);
        } else {
          Round2Options ro;
          ro.owner_payload_pk = setup.payload_pk;
          m2 = reference_round2(m1, reference, *keys, g, p.version == ProtocolVersion::V2, ro);
        }
        ch.send(v, MsgType::Msg2, m2.serialize(g));
      }
      res.timings.online_ms = ms_between(t1, Clock::now());
    }
    if (p.result_delivery == ResultDelivery::Both) {
      stage = "result";
      res.delivered = OutcomeSummary::parse(ch.expect(v, MsgType::Result, stage));
    }
  });
  if (res.delivered) {
    log(LogLevel::Info, "reference received result: matches " + std::to_string(res.delivered->match_count));
  }
  return res;
}

void serve(TcpListener& listener, const SessionParams& local,
           const std::vector<HashedRecord>& reference, const SessionOptions& opt,
           const ReferenceResources& res, std::size_t max_sessions, std::atomic<bool>* stop) {
  std::vector<std::thread> workers;
  std::size_t started = 0;
  while ((max_sessions == 0 || started < max_sessions) && !(stop && stop->load())) {
    auto conn = listener.accept(Millis(200));
    if (!conn) continue;
    ++started;
    log(LogLevel::Info, "session " + std::to_string(started) + " accepted");
    workers.emplace_back([&, id = started, c = std::move(conn)]() mutable {
      try {
        run_reference_session(local, reference, *c, opt, res);
        log(LogLevel::Info, "session " + std::to_string(id) + " complete");
      } catch (const Error& e) {
        log(LogLevel::Warn, "session " + std::to_string(id) + " failed: " + e.what());
      }
      c->close();
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace gazecheck
