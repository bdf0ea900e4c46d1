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

#include <cstdint>
#include <string>
#include <vector>

#include "gazecheck/group.hpp"
#include "gazecheck/psi.hpp"

namespace gazecheck {

/// Owner-side key material for a DH session: the PSI exponent and the
/// ElGamal pair under which the reference seals its payloads.
struct DhOwnerKeys {
  PrivateKey k;
  ElGamalKeyPair payload;
};

DhOwnerKeys make_owner_keys(const Group& g);

/// kR blinds elements; kL blinds the label channel. Only A_i^kL ever leaves
/// the reference, so an owner learns H(d)^kL exactly for its own digests.
struct DhReferenceKeys {
  PrivateKey k;
  PrivateKey k_label;
};

DhReferenceKeys make_reference_keys(const Group& g);

struct Msg1 {
  GroupId group = GroupId::P256;
  Bytes session_nonce;
  std::vector<Bytes> a;         // H(d_i)^kO, owner order
  std::vector<Bytes> a_folded;  // H(d_i || labels_i)^kO, cardinality-only runs

  Bytes serialize() const;
  static Msg1 parse(ByteView b);
};

struct Msg2 {
  bool shuffled = false;
  std::vector<Bytes> b;              // H(e_j)^kR
  std::vector<SealedPayload> q;      // per b_j, exact-match runs
  std::vector<Bytes> a_prime;        // A_i^kR
  std::vector<Bytes> c;              // A_i^kL, same order as a_prime
  std::vector<Bytes> b_folded;       // cardinality-only runs
  std::vector<Bytes> a_folded_prime;
  /// Published-set runs carry label tokens under the publication nonce
  /// instead of sealed payloads.
  std::vector<LabelSlots> tokens;
  Bytes token_nonce;

  Bytes serialize(const Group& g) const;
  static Msg2 parse(ByteView b, const Group& g);
};

struct Round1Options {
  Bytes session_nonce;
  bool folded = false;
};

/// A_i = H(d_i)^kO. Input must be deduplicated.
Msg1 owner_round1(const std::vector<HashedRecord>& hashed, const PrivateKey& k_o, const Group& g,
                  const Round1Options& opt = {});

/// Reference-side material that depends only on its own input and keys.
/// Per distinct reference digest. Duplicate digests in the input are merged
/// and keep their distinct labels (see DedupResult).
struct ReferencePrecomp {
  std::vector<Bytes> b;       // H(e_j)^kR
  std::vector<Bytes> shared;  // H(e_j)^kL
  std::vector<std::vector<LabelSet>> labels;
  std::vector<Bytes> b_folded;  // one per (digest, label set)
};

ReferencePrecomp precompute_reference(const std::vector<HashedRecord>& hashed_ref,
                                      const DhReferenceKeys& keys, const Group& g, bool folded);

struct Round2Options {
  /// Owner's payload key; required unless shuffling.
  Bytes owner_payload_pk;
  WrapPool* wraps = nullptr;
  /// Computed on the fly when null.
  const ReferencePrecomp* precomp = nullptr;
};

/// shuffle = false: exact-match response (A' in Msg1 order, payloads per B).
/// shuffle = true: A' and the folded lists are freshly permuted and no
/// payloads or label channel are sent.
Msg2 reference_round2(const Msg1& m1, const std::vector<HashedRecord>& hashed_ref,
                      const DhReferenceKeys& keys, const Group& g, bool shuffle,
                      const Round2Options& opt = {});

struct FinalizeOptions {
  bool expect_shuffled = false;
  VerdictOptions verdicts;
};

PsiOutcome owner_finalize(const Msg2& m2, const DhOwnerKeys& keys,
                          const std::vector<HashedRecord>& hashed, const Group& g,
                          const Msg1& m1, const FinalizeOptions& opt = {});

/// Reusable reference package: B plus label tokens blinded with H(e_j)^kL and
/// a publication nonce. Independent of any owner.
struct PublishedReferenceSet {
  static constexpr std::uint8_t kFormatVersion = 1;

  std::uint8_t format_version = kFormatVersion;
  GroupId group = GroupId::P256;
  std::uint16_t bits = 80;
  Channel channel = Channel::Gaze;
  Bytes nonce;
  std::vector<Bytes> b;
  std::vector<LabelSlots> tokens;

  Bytes serialize() const;
  static PublishedReferenceSet parse(ByteView b);
  bool operator==(const PublishedReferenceSet&) const = default;
};

PublishedReferenceSet publish_reference(const std::vector<HashedRecord>& hashed_ref,
                                        const DhReferenceKeys& keys, const Group& g,
                                        Channel channel);

/// Only A' and the label channel are computed; B is copied from `published`.
Msg2 v3_online(const Msg1& m1, const PublishedReferenceSet& published, const DhReferenceKeys& keys,
               const Group& g, std::uint8_t session_format_version = PublishedReferenceSet::kFormatVersion);

void write_published_set(const std::string& path, const PublishedReferenceSet& set);
PublishedReferenceSet read_published_set(const std::string& path);

/// Key file for serving a published set. Local storage only; never sent.
Bytes serialize_reference_keys(const DhReferenceKeys& keys, GroupId group);
DhReferenceKeys parse_reference_keys(ByteView b, GroupId expected);

}  // namespace gazecheck
