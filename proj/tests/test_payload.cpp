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

#include <array>
#include <cstring>
#include <set>

#include "gazecheck/crypto.hpp"
#include "gazecheck/group.hpp"
#include "gazecheck/payload.hpp"
#include "support.hpp"

using namespace gazecheck;
using gazecheck::testing::error_code;

namespace {

LabelSet gaze(std::int32_t p, std::int32_t y) {
  LabelSet l;
  l.gaze = QuantizedLabel{Channel::Gaze, p, y};
  return l;
}

LabelSet both(std::int32_t gp, std::int32_t gy, std::int32_t pp, std::int32_t py) {
  LabelSet l = gaze(gp, gy);
  l.pose = QuantizedLabel{Channel::Pose, pp, py};
  return l;
}

const Group& p256() { return group_for(GroupId::P256); }

Bytes shared_of(std::string_view tag) { return p256().hash_to_group(as_bytes(tag)); }

Bytes nonce() { return Bytes(kSessionNonceSize, 0x42); }

}  // namespace

TEST(LabelBlock, RoundTripAndLayout) {
  LabelSet l = both(18, 13, 2, 65535);
  LabelBlock b = encode_label_block(l);
  EXPECT_EQ(b[0], 0);
  EXPECT_EQ(b[1], 18);
  EXPECT_EQ(b[3], 13);
  EXPECT_EQ(b[8], 3);
  EXPECT_EQ(decode_label_block(b), l);
  EXPECT_EQ(decode_label_block(encode_label_block(LabelSet{})), LabelSet{});
  EXPECT_EQ(error_code([] { encode_label_block(gaze(-1, 0)); }), ErrorCode::LabelTooWide);
  EXPECT_EQ(error_code([] { encode_label_block(gaze(0, 70000)); }), ErrorCode::LabelTooWide);
  b[12] = 1;
  EXPECT_EQ(error_code([&] { decode_label_block(b); }), ErrorCode::IntegrityFailure);
}

TEST(Seal, FreshCiphertextsSameBlindedValue) {
  auto kp = elgamal_keygen(p256());
  Bytes s = shared_of("element");
  std::vector<LabelSet> labels{gaze(18, 13)};
  SealedPayload a = seal(p256(), labels, s, nonce(), kp.pk);
  SealedPayload b = seal(p256(), labels, s, nonce(), kp.pk);
  EXPECT_NE(a.c1, b.c1);
  EXPECT_NE(a.body, b.body);
  EXPECT_EQ(open(p256(), a, kp.sk), open(p256(), b, kp.sk));
  EXPECT_EQ(open(p256(), a, kp.sk), blind_labels(labels, blind_slots(s, nonce())));
}

TEST(Seal, WrongKeyGivesGarbage) {
  auto kp = elgamal_keygen(p256());
  auto other = elgamal_keygen(p256());
  Bytes s = shared_of("element");
  SealedPayload p = seal(p256(), {gaze(18, 13)}, s, nonce(), kp.pk);
  LabelSlots expected = blind_labels(gaze(18, 13), blind_slots(s, nonce()));
  EXPECT_NE(open_unverified(p256(), p, other.sk), expected);
  EXPECT_EQ(error_code([&] { open(p256(), p, other.sk); }), ErrorCode::IntegrityFailure);
  SealedPayload tampered = p;
  tampered.body[5] ^= 1;
  EXPECT_EQ(error_code([&] { open(p256(), tampered, kp.sk); }), ErrorCode::IntegrityFailure);
}

TEST(Seal, SerializedLengthIndependentOfLabels) {
  auto kp = elgamal_keygen(p256());
  Bytes s = shared_of("element");
  std::set<std::size_t> sizes;
  for (const auto& labels : std::vector<std::vector<LabelSet>>{
           {gaze(0, 0)}, {both(65535, 65535, 65535, 65535)}, {LabelSet{}},
           {gaze(1, 2), gaze(3, 4), gaze(5, 6), gaze(7, 8)}}) {
    ByteWriter w;
    seal(p256(), labels, s, nonce(), kp.pk).write(w);
    sizes.insert(w.size());
  }
  EXPECT_EQ(sizes.size(), 1u);
}

TEST(Seal, WireRoundTrip) {
  for (GroupId id : {GroupId::P256, GroupId::Modp3072}) {
    const Group& g = group_for(id);
    auto kp = elgamal_keygen(g);
    SealedPayload p = seal(g, {gaze(4, 5)}, g.hash_to_group(as_bytes("e")), nonce(), kp.pk);
    ByteWriter w;
    p.write(w);
    EXPECT_EQ(w.size(), 2 * g.element_size() + 16 + 64 + 16);
    ByteReader r(w.bytes());
    EXPECT_EQ(SealedPayload::read(r, g), p);
  }
}

TEST(Seal, WrapPoolPrecomputes) {
  auto kp = elgamal_keygen(p256());
  WrapPool pool(p256(), kp.pk);
  pool.fill(3);
  EXPECT_EQ(pool.available(), 3u);
  KeyWrap w = pool.take();
  EXPECT_EQ(pool.available(), 2u);
  LabelSlots blinded = blind_labels(gaze(1, 1), blind_slots(shared_of("x"), nonce()));
  EXPECT_EQ(open(p256(), seal_blinded(blinded, w), kp.sk), blinded);
  pool.take();
  pool.take();
  EXPECT_NO_THROW(pool.take());  // refills on demand
}

TEST(Verdict, SpecifiedCases) {
  LabelSlots blind = blind_slots(shared_of("e"), nonce());
  auto owner = blind_labels(gaze(18, 13), blind);
  EXPECT_EQ(verdict(owner, blind_labels(gaze(18, 13), blind), true, Channel::Gaze).overall,
            PayloadVerdict::Compliant);
  EXPECT_EQ(verdict(owner, blind_labels(gaze(18, 14), blind), true, Channel::Gaze).overall,
            PayloadVerdict::NonCompliant);
  EXPECT_EQ(verdict(owner, blind_labels(gaze(18, 13), blind), false, Channel::Gaze),
            Verdict{});
}

TEST(Verdict, DifferentSharedElementsStayOpaque) {
  constexpr int kTrials = 10000;
  int equal_slots = 0;
  LabelSet l = both(10, 20, 3, 4);
  for (int t = 0; t < kTrials; ++t) {
    Bytes na = random_bytes(kSessionNonceSize);
    auto a = blind_labels(l, blind_slots(random_bytes(33), na));
    auto b = blind_labels(l, blind_slots(random_bytes(33), na));
    for (std::size_t j = 0; j < kLabelSlots; ++j) equal_slots += a[j] == b[j];
    EXPECT_EQ(verdict(a, b, false, Channel::Both).overall, PayloadVerdict::Opaque);
    EXPECT_NE(verdict(a, b, true, Channel::Both).overall, PayloadVerdict::Compliant);
  }
  EXPECT_EQ(equal_slots, 0);
}

TEST(Verdict, EqualitySoundnessExhaustive) {
  LabelSlots blind = blind_slots(shared_of("e"), nonce());
  for (int a = 0; a < 36; ++a) {
    for (int b = 0; b < 36; ++b) {
      LabelSet la = both(a % 6, a / 6, 1, 1);
      LabelSet lb = both(b % 6, b / 6, 1, 1);
      auto v = verdict(blind_labels(la, blind), blind_labels(lb, blind), true, Channel::Both);
      EXPECT_EQ(v.overall == PayloadVerdict::Compliant, a == b);
      EXPECT_EQ(v.gaze == PayloadVerdict::Compliant, a == b);
      EXPECT_EQ(v.pose, PayloadVerdict::Compliant);
    }
  }
}

TEST(Verdict, PerChannelReporting) {
  LabelSlots blind = blind_slots(shared_of("e"), nonce());
  auto v = verdict(blind_labels(both(1, 1, 2, 2), blind), blind_labels(both(1, 1, 2, 3), blind),
                   true, Channel::Both);
  EXPECT_EQ(v.gaze, PayloadVerdict::Compliant);
  EXPECT_EQ(v.pose, PayloadVerdict::NonCompliant);
  EXPECT_EQ(v.overall, PayloadVerdict::NonCompliant);
  auto c = collapse(verdict(blind_labels(gaze(1, 1), blind), blind_labels(gaze(1, 1), blind), true,
                            Channel::Gaze));
  EXPECT_EQ(c.overall, PayloadVerdict::Opaque);
  EXPECT_EQ(c.gaze, PayloadVerdict::Opaque);
}

TEST(Verdict, AnySlotAgreementCounts) {
  LabelSlots blind = blind_slots(shared_of("e"), nonce());
  std::vector<LabelSet> ref{gaze(5, 5), gaze(6, 5), both(0, 0, 0, 0)};
  auto rb = blind_labels(ref, blind);
  EXPECT_EQ(unblind_labels(rb, blind), ref);
  EXPECT_EQ(verdict(blind_labels(gaze(6, 5), blind), rb, true, Channel::Gaze).overall,
            PayloadVerdict::Compliant);
  EXPECT_EQ(verdict(blind_labels(gaze(7, 5), blind), rb, true, Channel::Gaze).overall,
            PayloadVerdict::NonCompliant);
  // Gaze agrees with slot 0 and pose with slot 2, but no single slot agrees on both.
  std::vector<LabelSet> mixed{both(1, 1, 9, 9), both(8, 8, 2, 2)};
  auto v = verdict(blind_labels(both(1, 1, 2, 2), blind), blind_labels(mixed, blind), true,
                   Channel::Both);
  EXPECT_EQ(v.gaze, PayloadVerdict::Compliant);
  EXPECT_EQ(v.pose, PayloadVerdict::Compliant);
  EXPECT_EQ(v.overall, PayloadVerdict::NonCompliant);
  EXPECT_EQ(error_code([&] { blind_labels(std::vector<LabelSet>{}, blind); }),
            ErrorCode::InvalidArgument);
}

TEST(Blind, UniformBytes) {
  std::array<std::size_t, 256> counts{};
  constexpr int kElems = 10000;
  for (int i = 0; i < kElems; ++i) {
    Bytes e(4);
    std::memcpy(e.data(), &i, 4);
    for (auto byte : blind_key(e, nonce())) ++counts[byte];
  }
  const double expected = kElems * kLabelBlockSize / 256.0;
  double chi2 = 0;
  for (auto c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 255 degrees of freedom; 330 is past the 0.999 quantile.
  EXPECT_LT(chi2, 330.0);
  EXPECT_NE(blind_key(shared_of("e"), nonce(), 0), blind_key(shared_of("e"), nonce(), 1));
}

TEST(Reveal, RecoversOnlyOnMatch) {
  auto kp = elgamal_keygen(p256());
  Bytes s = shared_of("matched");
  std::vector<LabelSet> ref{gaze(18, 13), gaze(18, 12)};
  SealedPayload p = seal(p256(), ref, s, nonce(), kp.pk);
  EXPECT_EQ(reveal_correct_label(p256(), p, s, nonce(), kp.sk, true), ref);
  EXPECT_EQ(error_code([&] {
              reveal_correct_label(p256(), p, shared_of("other"), nonce(), kp.sk, true);
            }),
            ErrorCode::IntegrityFailure);
  EXPECT_EQ(error_code([&] { reveal_correct_label(p256(), p, s, nonce(), kp.sk, false); }),
            ErrorCode::RevealDisabled);
}
