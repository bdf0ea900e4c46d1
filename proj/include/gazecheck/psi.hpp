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
#include <optional>
#include <string>
#include <vector>

#include "gazecheck/encode.hpp"
#include "gazecheck/payload.hpp"

namespace gazecheck {

/// One PSI element per distinct digest. `unique[k]` carries the digest and the
/// representative labels; `labels[k]` the distinct label sets of its members,
/// most frequent first (ties to the smaller encoded block), at most
/// kLabelSlots of them, so labels[k][0] is the representative.
/// `members[k]` lists the input positions that share it.
struct DedupResult {
  std::vector<HashedRecord> unique;
  std::vector<std::vector<LabelSet>> labels;
  std::vector<std::vector<std::size_t>> members;
};

DedupResult dedup(const std::vector<HashedRecord>& hashed);

/// DuplicateDigest(ids) if two records share a digest.
void require_unique(const std::vector<HashedRecord>& hashed);

LabelSet labels_of(const HashedRecord& h);

/// Bytes hashed into the group for a digest.
Bytes element_input(const Digest& d);
/// Digest bound to its label block; equal iff both digest and labels agree.
Bytes folded_input(const HashedRecord& h);

enum class OutcomeMode : std::uint8_t { ExactMatches, CardinalityOnly };

std::string to_string(OutcomeMode m);

struct ElementVerdict {
  std::size_t owner_index = 0;
  Verdict verdict;
  /// Reference blinded slots and the blinds, so member records with other
  /// labels can be judged locally.
  LabelSlots reference_blinded{};
  LabelSlots blind{};
  /// Reference label sets, when reveal was negotiated.
  std::optional<std::vector<LabelSet>> revealed;
};

struct PsiOutcome {
  OutcomeMode mode = OutcomeMode::ExactMatches;
  /// Indices into the owner's unique element list; absent when CardinalityOnly.
  std::optional<std::vector<std::size_t>> matched_owner_indices;
  std::size_t match_count = 0;
  std::vector<ElementVerdict> verdicts;
  std::size_t compliant_count = 0;
  std::size_t non_compliant_count = 0;

  bool cardinality_only() const { return mode == OutcomeMode::CardinalityOnly; }
};

/// Summary that can cross the wire (result_delivery = Both).
struct OutcomeSummary {
  OutcomeMode mode = OutcomeMode::ExactMatches;
  std::uint64_t match_count = 0;
  std::uint64_t compliant_count = 0;
  std::uint64_t non_compliant_count = 0;

  Bytes serialize() const;
  static OutcomeSummary parse(ByteView b);
  bool operator==(const OutcomeSummary&) const = default;
};

OutcomeSummary summarize(const PsiOutcome& o);

/// Options the owner applies when turning matches into verdicts.
struct VerdictOptions {
  Channel channel = Channel::Gaze;
  bool reveal_correct_label = false;
  /// Indistinguishability: Compliant verdicts become Opaque after tallying.
  bool collapse_compliant = false;
};

/// Tallies compliant/non-compliant verdicts and applies collapse.
void finish_outcome(PsiOutcome& o, const VerdictOptions& opt);

}  // namespace gazecheck
