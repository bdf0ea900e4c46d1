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

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "gazecheck/encode.hpp"
#include "gazecheck/psi.hpp"

namespace gazecheck {

struct ConflictPair {
  std::string first;
  std::string second;
  Channel channel = Channel::Gaze;

  bool operator==(const ConflictPair&) const = default;
};

struct ConsistencyReport {
  std::vector<ConflictPair> conflicting_pairs;
  std::size_t pair_count_checked = 0;
};

/// Pairs with equal digests whose buckets differ, one entry per differing
/// channel, (first, second) in input order.
ConsistencyReport verify_local(const std::vector<HashedRecord>& hashed);

/// Plaintext comparison. Each owner record is judged against the
/// representative labels of the reference element with the same digest.
VerificationReport verify_public(const std::vector<HashedRecord>& owner,
                                 const std::vector<HashedRecord>& reference, Channel channel);

/// As above, but first rejects inputs encoded with different parameters.
VerificationReport verify_public(const DigestFile& owner, const DigestFile& reference);

/// Fans a private outcome over unique elements back out to the owner's
/// records. `collapse_compliant` keeps compliant records out of the id lists.
VerificationReport report_from_outcome(const PsiOutcome& outcome,
                                       const std::vector<HashedRecord>& owner_records,
                                       const DedupResult& owner, Channel channel,
                                       bool collapse_compliant = false);

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

/// 0 when any marginal is empty.
double compute_mcc(const ConfusionCounts& c);

/// Scores a report against a truth set of corrupted ids. Only matched records
/// (compliant or flagged) are scored. MaskSizeMismatch if a truth id is not
/// part of the report.
VerificationReport evaluate(const VerificationReport& report, const std::set<std::string>& corrupted);

void write_report_text(std::ostream& out, const VerificationReport& r, std::string_view header = {});
std::string report_json(const VerificationReport& r);
void write_consistency_text(std::ostream& out, const ConsistencyReport& r);

}  // namespace gazecheck
