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

#include "gazecheck/payload.hpp"

#include <algorithm>

#include "gazecheck/crypto.hpp"

namespace gazecheck {

namespace {

constexpr std::uint8_t kMaskGaze = 1;
constexpr std::uint8_t kMaskPose = 2;

void put_bucket(LabelBlock& b, std::size_t off, std::int32_t v) {
  if (v < 0 || v > 0xffff) fail(ErrorCode::LabelTooWide, std::to_string(v));
  b[off] = static_cast<std::uint8_t>(v >> 8);
  b[off + 1] = static_cast<std::uint8_t>(v);
}

std::int32_t get_bucket(const LabelBlock& b, std::size_t off) {
  return (static_cast<std::int32_t>(b[off]) << 8) | b[off + 1];
}

Hash256 payload_key(ByteView m, ByteView nonce) {
  return hmac_sha256(m, {as_bytes("gazecheck/payload/key"), nonce});
}

using Body = std::array<std::uint8_t, kLabelBlockSize * kLabelSlots>;

Body keystream(const Hash256& key) {
  Body out{};
  for (std::size_t off = 0, ctr = 0; off < out.size(); off += 32, ++ctr) {
    const std::uint8_t c = static_cast<std::uint8_t>(ctr);
    Hash256 ks = hmac_sha256(view(key), {as_bytes("gazecheck/payload/stream"), ByteView(&c, 1)});
    std::copy_n(ks.begin(), std::min<std::size_t>(32, out.size() - off), out.begin() + off);
  }
  return out;
}

std::array<std::uint8_t, 16> mac(const Hash256& key, const SealedPayload& p) {
  Hash256 t = hmac_sha256(view(key), {as_bytes("gazecheck/payload/tag"), p.c1, p.c2, p.nonce, p.body});
  std::array<std::uint8_t, 16> out{};
  std::copy_n(t.begin(), 16, out.begin());
  return out;
}

bool equal_ct(ByteView a, ByteView b) {
  std::uint8_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d |= a[i] ^ b[i];
  return d == 0;
}

bool same_bytes(const LabelBlock& a, const LabelBlock& b, std::size_t off) {
  return std::equal(a.begin() + off, a.begin() + off + 4, b.begin() + off);
}

}  // namespace

LabelBlock encode_label_block(const LabelSet& labels) {
  LabelBlock b{};
  if (labels.gaze) {
    put_bucket(b, 0, labels.gaze->bucket_pitch);
    put_bucket(b, 2, labels.gaze->bucket_yaw);
    b[8] |= kMaskGaze;
  }
  if (labels.pose) {
    put_bucket(b, 4, labels.pose->bucket_pitch);
    put_bucket(b, 6, labels.pose->bucket_yaw);
    b[8] |= kMaskPose;
  }
  return b;
}

LabelSet decode_label_block(const LabelBlock& b) {
  if (std::any_of(b.begin() + 9, b.end(), [](std::uint8_t v) { return v != 0; }) ||
      (b[8] & ~(kMaskGaze | kMaskPose)) != 0) {
    fail(ErrorCode::IntegrityFailure, "label block");
  }
  LabelSet out;
  if (b[8] & kMaskGaze) out.gaze = QuantizedLabel{Channel::Gaze, get_bucket(b, 0), get_bucket(b, 2)};
  if (b[8] & kMaskPose) out.pose = QuantizedLabel{Channel::Pose, get_bucket(b, 4), get_bucket(b, 6)};
  return out;
}

LabelBlock blind_key(ByteView shared_elem, ByteView session_nonce, std::uint8_t slot) {
  Hash256 h = hmac_sha256(shared_elem, {as_bytes("gazecheck/payload/blind"), session_nonce,
                                        ByteView(&slot, 1)});
  LabelBlock out{};
  std::copy_n(h.begin(), kLabelBlockSize, out.begin());
  return out;
}

LabelSlots blind_slots(ByteView shared_elem, ByteView session_nonce) {
  LabelSlots out;
  for (std::size_t j = 0; j < kLabelSlots; ++j) {
    out[j] = blind_key(shared_elem, session_nonce, static_cast<std::uint8_t>(j));
  }
  return out;
}

LabelBlock xor_blocks(const LabelBlock& a, const LabelBlock& b) {
  LabelBlock out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

LabelSlots blind_labels(const std::vector<LabelSet>& labels, const LabelSlots& blinds) {
  if (labels.empty()) fail(ErrorCode::InvalidArgument, "no labels to blind");
  LabelSlots out;
  for (std::size_t j = 0; j < kLabelSlots; ++j) {
    out[j] = xor_blocks(encode_label_block(labels[std::min(j, labels.size() - 1)]), blinds[j]);
  }
  return out;
}

LabelSlots blind_labels(const LabelSet& labels, const LabelSlots& blinds) {
  return blind_labels(std::vector<LabelSet>{labels}, blinds);
}

std::vector<LabelSet> unblind_labels(const LabelSlots& blinded, const LabelSlots& blinds) {
  std::vector<LabelSet> out;
  for (std::size_t j = 0; j < kLabelSlots; ++j) {
    LabelSet l = decode_label_block(xor_blocks(blinded[j], blinds[j]));
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  }
  return out;
}

void write_slots(ByteWriter& w, const LabelSlots& s) {
  for (const auto& b : s) w.raw(b);
}

LabelSlots read_slots(ByteReader& r) {
  LabelSlots s;
  for (auto& b : s) {
    auto v = r.raw(kLabelBlockSize);
    std::copy(v.begin(), v.end(), b.begin());
  }
  return s;
}

ElGamalKeyPair elgamal_keygen(const Group& g) {
  PrivateKey sk = keygen(g);
  Bytes pk = g.exp_base(sk.scalar());
  return {std::move(sk), std::move(pk)};
}

KeyWrap make_wrap(const Group& g, ByteView recipient_pk) {
  PrivateKey r = keygen(g);
  PrivateKey m = keygen(g);
  KeyWrap w;
  w.m = g.exp_base(m.scalar());
  w.c1 = g.exp_base(r.scalar());
  w.c2 = g.mul(w.m, g.exp(recipient_pk, r.scalar()));
  return w;
}

void WrapPool::fill(std::size_t n) {
  while (stock_.size() < n) stock_.push_back(make_wrap(*g_, pk_));
}

KeyWrap WrapPool::take() {
  if (stock_.empty()) return make_wrap(*g_, pk_);
  KeyWrap w = std::move(stock_.front());
  stock_.pop_front();
  return w;
}

void SealedPayload::write(ByteWriter& w) const {
  w.raw(c1);
  w.raw(c2);
  w.raw(nonce);
  w.raw(body);
  w.raw(tag);
}

SealedPayload SealedPayload::read(ByteReader& r, const Group& g) {
  SealedPayload p;
  auto c1 = r.raw(g.element_size());
  auto c2 = r.raw(g.element_size());
  p.c1.assign(c1.begin(), c1.end());
  p.c2.assign(c2.begin(), c2.end());
  auto copy = [&](auto& dst) {
    auto s = r.raw(dst.size());
    std::copy(s.begin(), s.end(), dst.begin());
  };
  copy(p.nonce);
  copy(p.body);
  copy(p.tag);
  return p;
}

SealedPayload seal_blinded(const LabelSlots& blinded, const KeyWrap& wrap) {
  SealedPayload p;
  p.c1 = wrap.c1;
  p.c2 = wrap.c2;
  random_bytes(p.nonce);
  Hash256 key = payload_key(wrap.m, p.nonce);
  auto ks = keystream(key);
  for (std::size_t i = 0; i < p.body.size(); ++i) {
    p.body[i] = blinded[i / kLabelBlockSize][i % kLabelBlockSize] ^ ks[i];
  }
  p.tag = mac(key, p);
  secure_zero(key);
  return p;
}

SealedPayload seal(const Group& g, const std::vector<LabelSet>& labels, ByteView shared_elem,
                   ByteView session_nonce, ByteView recipient_pk) {
  return seal_blinded(blind_labels(labels, blind_slots(shared_elem, session_nonce)),
                      make_wrap(g, recipient_pk));
}

namespace {

LabelSlots decrypt(const Group& g, const SealedPayload& p, const PrivateKey& sk, bool verify) {
  Bytes m = g.div(p.c2, g.exp(p.c1, sk.scalar()));
  Hash256 key = payload_key(m, p.nonce);
  if (verify) {
    auto expect = mac(key, p);
    if (!equal_ct(expect, p.tag)) fail(ErrorCode::IntegrityFailure, "payload tag");
  }
  auto ks = keystream(key);
  LabelSlots out{};
  for (std::size_t i = 0; i < p.body.size(); ++i) {
    out[i / kLabelBlockSize][i % kLabelBlockSize] = p.body[i] ^ ks[i];
  }
  secure_zero(key);
  return out;
}

}  // namespace

LabelSlots open(const Group& g, const SealedPayload& p, const PrivateKey& sk) {
  return decrypt(g, p, sk, true);
}

LabelSlots open_unverified(const Group& g, const SealedPayload& p, const PrivateKey& sk) {
  return decrypt(g, p, sk, false);
}

std::string to_string(PayloadVerdict v) {
  switch (v) {
    case PayloadVerdict::Compliant: return "compliant";
    case PayloadVerdict::NonCompliant: return "non-compliant";
    case PayloadVerdict::Opaque: return "opaque";
  }
  return "opaque";
}

Verdict verdict(const LabelSlots& owner, const LabelSlots& reference, bool matched,
                Channel channel) {
  Verdict v;
  if (!matched) return v;
  auto any = [&](auto&& agree) {
    for (std::size_t j = 0; j < kLabelSlots; ++j) {
      if (agree(owner[j], reference[j])) return PayloadVerdict::Compliant;
    }
    return PayloadVerdict::NonCompliant;
  };
  if (uses_gaze(channel)) {
    v.gaze = any([](const LabelBlock& a, const LabelBlock& b) { return same_bytes(a, b, 0); });
  }
  if (uses_pose(channel)) {
    v.pose = any([](const LabelBlock& a, const LabelBlock& b) { return same_bytes(a, b, 4); });
  }
  v.overall = any([](const LabelBlock& a, const LabelBlock& b) { return a == b; });
  return v;
}

Verdict collapse(const Verdict& v) {
  auto c = [](PayloadVerdict p) {
    return p == PayloadVerdict::Compliant ? PayloadVerdict::Opaque : p;
  };
  return {c(v.overall), c(v.gaze), c(v.pose)};
}

std::vector<LabelSet> reveal_correct_label(const Group& g, const SealedPayload& reference_payload,
                                           ByteView shared_elem, ByteView session_nonce,
                                           const PrivateKey& sk, bool enabled) {
  if (!enabled) fail(ErrorCode::RevealDisabled, "reveal_correct_label not negotiated");
  return unblind_labels(open(g, reference_payload, sk), blind_slots(shared_elem, session_nonce));
}

}  // namespace gazecheck
