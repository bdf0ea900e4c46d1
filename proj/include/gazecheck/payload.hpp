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

#include <array>
#include <deque>
#include <optional>
#include <vector>

#include "gazecheck/bytes.hpp"
#include "gazecheck/group.hpp"
#include "gazecheck/model.hpp"

namespace gazecheck {

inline constexpr std::size_t kLabelBlockSize = 16;
inline constexpr std::size_t kSessionNonceSize = 16;
/// Distinct reference labels carried per element. A digest shared by records
/// in different buckets keeps its most frequent label sets.
inline constexpr std::size_t kLabelSlots = 4;
using LabelBlock = std::array<std::uint8_t, kLabelBlockSize>;
using LabelSlots = std::array<LabelBlock, kLabelSlots>;

struct LabelSet {
  std::optional<QuantizedLabel> gaze;
  std::optional<QuantizedLabel> pose;

  bool operator==(const LabelSet&) const = default;
};

/// Fixed layout: gaze pitch, gaze yaw, pose pitch, pose yaw (u16 BE each),
/// a channel mask byte (1 gaze, 2 pose) and seven zero bytes. The zero tail
/// doubles as the integrity check when a label is unblinded.
LabelBlock encode_label_block(const LabelSet& labels);
/// Throws IntegrityFailure on a nonzero tail or unknown mask bits.
LabelSet decode_label_block(const LabelBlock& block);

/// PRF(shared element, session nonce, slot) truncated to the block width.
LabelBlock blind_key(ByteView shared_elem, ByteView session_nonce, std::uint8_t slot = 0);
LabelSlots blind_slots(ByteView shared_elem, ByteView session_nonce);
LabelBlock xor_blocks(const LabelBlock& a, const LabelBlock& b);

/// Slot j holds labels[j] (the last one repeated once the list runs out)
/// under blinds[j]. Labels past kLabelSlots are dropped; the list must be
/// non-empty.
LabelSlots blind_labels(const std::vector<LabelSet>& labels, const LabelSlots& blinds);
LabelSlots blind_labels(const LabelSet& labels, const LabelSlots& blinds);
/// Distinct label sets in slot order; IntegrityFailure on a malformed slot.
std::vector<LabelSet> unblind_labels(const LabelSlots& blinded, const LabelSlots& blinds);

void write_slots(ByteWriter& w, const LabelSlots& s);
LabelSlots read_slots(ByteReader& r);

struct ElGamalKeyPair {
  PrivateKey sk;
  Bytes pk;
};

ElGamalKeyPair elgamal_keygen(const Group& g);

/// ElGamal encryption of a random element M under a recipient key:
/// (c1, c2) = (g^r, M pk^r). Independent of any label, so it can be made
/// ahead of time.
struct KeyWrap {
  Bytes c1;
  Bytes c2;
  Bytes m;  // encoded M; secret
};

KeyWrap make_wrap(const Group& g, ByteView recipient_pk);

/// Stock of precomputed wraps for one recipient key. take() falls back to
/// computing a wrap on the spot once the stock runs out.
class WrapPool {
 public:
  WrapPool(const Group& g, Bytes recipient_pk) : g_(&g), pk_(std::move(recipient_pk)) {}

  void fill(std::size_t n);
  KeyWrap take();
  std::size_t available() const { return stock_.size(); }
  const Bytes& recipient() const { return pk_; }

 private:
  const Group* g_;
  Bytes pk_;
  std::deque<KeyWrap> stock_;
};

struct SealedPayload {
  Bytes c1;
  Bytes c2;
  std::array<std::uint8_t, 16> nonce{};
  std::array<std::uint8_t, kLabelBlockSize * kLabelSlots> body{};
  std::array<std::uint8_t, 16> tag{};

  void write(ByteWriter& w) const;
  static SealedPayload read(ByteReader& r, const Group& g);
  bool operator==(const SealedPayload&) const = default;
};

/// Encrypts already blinded slots under `wrap`.
SealedPayload seal_blinded(const LabelSlots& blinded, const KeyWrap& wrap);

/// Blinds with blind_slots(shared_elem, session_nonce) and seals under a fresh
/// wrap for `recipient_pk`.
SealedPayload seal(const Group& g, const std::vector<LabelSet>& labels, ByteView shared_elem,
                   ByteView session_nonce, ByteView recipient_pk);

/// Recovers the blinded slots; IntegrityFailure if the tag does not verify.
LabelSlots open(const Group& g, const SealedPayload& p, const PrivateKey& sk);

/// Decryption without the tag check. A wrong key produces unrelated bytes.
LabelSlots open_unverified(const Group& g, const SealedPayload& p, const PrivateKey& sk);

enum class PayloadVerdict : std::uint8_t { Compliant, NonCompliant, Opaque };

std::string to_string(PayloadVerdict v);

struct Verdict {
  PayloadVerdict overall = PayloadVerdict::Opaque;
  PayloadVerdict gaze = PayloadVerdict::Opaque;
  PayloadVerdict pose = PayloadVerdict::Opaque;

  bool operator==(const Verdict&) const = default;
};

/// Compares blinded slots pairwise (the blinds cancel in equality). A channel
/// is compliant when any slot agrees on it; overall compliance needs one slot
/// that agrees on the whole block.
Verdict verdict(const LabelSlots& owner_blinded, const LabelSlots& reference_blinded, bool matched,
                Channel channel);

/// Indistinguishability mode: Compliant becomes Opaque (count it first).
Verdict collapse(const Verdict& v);

/// Owner-side recovery of the reference labels for a matched element.
/// RevealDisabled unless `enabled`; IntegrityFailure when `shared_elem` is not
/// the element the payload was blinded with.
std::vector<LabelSet> reveal_correct_label(const Group& g, const SealedPayload& reference_payload,
                                           ByteView shared_elem, ByteView session_nonce,
                                           const PrivateKey& sk, bool enabled);

}  // namespace gazecheck
