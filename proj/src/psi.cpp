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

#include "gazecheck/psi.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace gazecheck {

namespace {

std::vector<LabelSet> ranked_labels(const std::vector<HashedRecord>& hashed,
                                    const std::vector<std::size_t>& idx) {
  std::map<LabelBlock, std::pair<std::size_t, LabelSet>> counts;
  for (auto i : idx) {
    const LabelSet l = labels_of(hashed[i]);
    auto& c = counts[encode_label_block(l)];
    c.second = l;
    ++c.first;
  }
  std::vector<std::pair<std::size_t, LabelSet>> ranked;
  for (auto& [block, c] : counts) ranked.push_back(c);
  // Stable over the map's ascending block order, so ties go to the smaller block.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<LabelSet> out;
  for (std::size_t j = 0; j < ranked.size() && j < kLabelSlots; ++j) out.push_back(ranked[j].second);
  return out;
}

}  // namespace

DedupResult dedup(const std::vector<HashedRecord>& hashed) {
  DedupResult out;
  std::unordered_map<Digest, std::size_t, DigestHash> slot;
  for (std::size_t i = 0; i < hashed.size(); ++i) {
    auto [it, fresh] = slot.emplace(hashed[i].digest, out.unique.size());
    if (fresh) {
      out.unique.push_back(hashed[i]);
      out.members.emplace_back();
    }
    out.members[it->second].push_back(i);
  }
  out.labels.resize(out.unique.size());
  for (std::size_t k = 0; k < out.unique.size(); ++k) {
    if (out.members[k].size() < 2) {
      out.labels[k] = {labels_of(out.unique[k])};
      continue;
    }
    out.labels[k] = ranked_labels(hashed, out.members[k]);
    out.unique[k].gaze = out.labels[k][0].gaze;
    out.unique[k].pose = out.labels[k][0].pose;
  }
  return out;
}

void require_unique(const std::vector<HashedRecord>& hashed) {
  std::unordered_map<Digest, std::size_t, DigestHash> seen;
  for (std::size_t i = 0; i < hashed.size(); ++i) {
    auto [it, fresh] = seen.emplace(hashed[i].digest, i);
    if (!fresh) {
      fail(ErrorCode::DuplicateDigest, hashed[it->second].sample_id + ", " + hashed[i].sample_id);
    }
  }
}

LabelSet labels_of(const HashedRecord& h) { return {h.gaze, h.pose}; }

Bytes element_input(const Digest& d) {
  ByteWriter w;
  w.raw(as_bytes("gazecheck/element"));
  w.u16(static_cast<std::uint16_t>(d.width()));
  w.raw(d.bytes());
  return std::move(w).take();
}

Bytes folded_input(const HashedRecord& h) {
  ByteWriter w;
  w.raw(as_bytes("gazecheck/element+label"));
  w.u16(static_cast<std::uint16_t>(h.digest.width()));
  w.raw(h.digest.bytes());
  w.raw(encode_label_block(labels_of(h)));
  return std::move(w).take();
}

std::string to_string(OutcomeMode m) {
  return m == OutcomeMode::ExactMatches ? "exact-matches" : "cardinality-only";
}

Bytes OutcomeSummary::serialize() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(mode));
  w.u64(match_count);
  w.u64(compliant_count);
  w.u64(non_compliant_count);
  return std::move(w).take();
}

OutcomeSummary OutcomeSummary::parse(ByteView b) {
  ByteReader r(b);
  OutcomeSummary s;
  auto m = r.u8();
  if (m > 1) fail(ErrorCode::TranscriptMalformed, "outcome mode");
  s.mode = static_cast<OutcomeMode>(m);
  s.match_count = r.u64();
  s.compliant_count = r.u64();
  s.non_compliant_count = r.u64();
  r.expect_done();
  return s;
}

OutcomeSummary summarize(const PsiOutcome& o) {
  return {o.mode, o.match_count, o.compliant_count, o.non_compliant_count};
}

void finish_outcome(PsiOutcome& o, const VerdictOptions& opt) {
  o.compliant_count = 0;
  o.non_compliant_count = 0;
  for (auto& v : o.verdicts) {
    if (v.verdict.overall == PayloadVerdict::Compliant) ++o.compliant_count;
    if (v.verdict.overall == PayloadVerdict::NonCompliant) ++o.non_compliant_count;
    if (opt.collapse_compliant) v.verdict = collapse(v.verdict);
  }
}

}  // namespace gazecheck
