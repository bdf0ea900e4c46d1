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

#include "gazecheck/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace gazecheck {

namespace {

void tally(VerificationReport& rep, const Verdict& v) {
  if (v.gaze == PayloadVerdict::Compliant) ++rep.gaze.compliant;
  if (v.gaze == PayloadVerdict::NonCompliant) ++rep.gaze.non_compliant;
  if (v.pose == PayloadVerdict::Compliant) ++rep.pose.compliant;
  if (v.pose == PayloadVerdict::NonCompliant) ++rep.pose.non_compliant;
}

void judge(VerificationReport& rep, const std::string& id, const Verdict& v) {
  tally(rep, v);
  if (v.overall == PayloadVerdict::Compliant) {
    rep.compliant_ids.push_back(id);
  } else {
    rep.mismatched_ids.push_back(id);
  }
}

void close_counts(VerificationReport& rep) {
  rep.compliant_cardinality = rep.compliant_ids.size();
  rep.non_compliant_cardinality = rep.mismatched_ids.size();
}

}  // namespace

ConsistencyReport verify_local(const std::vector<HashedRecord>& hashed) {
  ConsistencyReport rep;
  DedupResult groups = dedup(hashed);
  for (const auto& members : groups.members) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const auto& x = hashed[members[a]];
        const auto& y = hashed[members[b]];
        ++rep.pair_count_checked;
        if (x.gaze != y.gaze) rep.conflicting_pairs.push_back({x.sample_id, y.sample_id, Channel::Gaze});
        if (x.pose != y.pose) rep.conflicting_pairs.push_back({x.sample_id, y.sample_id, Channel::Pose});
      }
    }
  }
  return rep;
}

VerificationReport verify_public(const std::vector<HashedRecord>& owner,
                                 const std::vector<HashedRecord>& reference, Channel channel) {
  DedupResult ref = dedup(reference);
  std::unordered_map<Digest, std::size_t, DigestHash> index;
  for (std::size_t j = 0; j < ref.unique.size(); ++j) index.emplace(ref.unique[j].digest, j);

  VerificationReport rep;
  rep.channel = channel;
  std::unordered_set<Digest, DigestHash> matched;
  for (const auto& r : owner) {
    auto it = index.find(r.digest);
    if (it == index.end()) {
      rep.unmatched_ids.push_back(r.sample_id);
      continue;
    }
    matched.insert(r.digest);
    // Plaintext slots: the same comparison as the private runs with zero blinds.
    const LabelSlots none{};
    judge(rep, r.sample_id,
          verdict(blind_labels(labels_of(r), none), blind_labels(ref.labels[it->second], none), true,
                  channel));
  }
  rep.matched_elements = matched.size();
  close_counts(rep);
  return rep;
}

VerificationReport verify_public(const DigestFile& owner, const DigestFile& reference) {
  const auto& a = owner.meta;
  const auto& b = reference.meta;
  if (a.lsh.seed != b.lsh.seed) fail(ErrorCode::BasisMismatch, "lsh_seed");
  if (a.lsh.bits != b.lsh.bits) fail(ErrorCode::BasisMismatch, "bits");
  if (a.lsh.lift_features != b.lsh.lift_features || a.lsh.bandwidth_deg != b.lsh.bandwidth_deg) {
    fail(ErrorCode::BasisMismatch, "lift");
  }
  if (a.channel != b.channel) fail(ErrorCode::BasisMismatch, "channel");
  if (!(a.tolerances == b.tolerances)) fail(ErrorCode::BasisMismatch, "tolerances");
  return verify_public(owner.records, reference.records, a.channel);
}

VerificationReport report_from_outcome(const PsiOutcome& outcome,
                                       const std::vector<HashedRecord>& owner_records,
                                       const DedupResult& owner, Channel channel,
                                       bool collapse_compliant) {
  VerificationReport rep;
  rep.channel = channel;
  rep.matched_elements = outcome.match_count;
  if (outcome.cardinality_only()) {
    rep.cardinality_only = true;
    rep.compliant_cardinality = outcome.compliant_count;
    rep.non_compliant_cardinality = outcome.non_compliant_count;
    return rep;
  }
  std::vector<const ElementVerdict*> by_element(owner.unique.size(), nullptr);
  for (const auto& v : outcome.verdicts) {
    if (v.owner_index >= owner.unique.size()) fail(ErrorCode::InvalidArgument, "owner index");
    by_element[v.owner_index] = &v;
  }
  std::size_t hidden = 0;
  for (std::size_t k = 0; k < owner.unique.size(); ++k) {
    const ElementVerdict* ev = by_element[k];
    for (auto idx : owner.members[k]) {
      const auto& rec = owner_records.at(idx);
      if (!ev) {
        rep.unmatched_ids.push_back(rec.sample_id);
        continue;
      }
      // Each member is judged with its own labels against the reference slots.
      const LabelSlots own = blind_labels(labels_of(rec), ev->blind);
      const Verdict v = verdict(own, ev->reference_blinded, true, channel);
      if (collapse_compliant && v.overall == PayloadVerdict::Compliant) {
        tally(rep, v);
        ++hidden;
        continue;
      }
      judge(rep, rec.sample_id, v);
    }
  }
  close_counts(rep);
  rep.compliant_cardinality += hidden;
  return rep;
}

double compute_mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

VerificationReport evaluate(const VerificationReport& report, const std::set<std::string>& corrupted) {
  if (report.cardinality_only) fail(ErrorCode::InvalidArgument, "cardinality-only report has no ids");
  std::unordered_set<std::string> known;
  known.insert(report.compliant_ids.begin(), report.compliant_ids.end());
  known.insert(report.mismatched_ids.begin(), report.mismatched_ids.end());
  known.insert(report.unmatched_ids.begin(), report.unmatched_ids.end());
  for (const auto& id : corrupted) {
    if (!known.count(id)) fail(ErrorCode::MaskSizeMismatch, "mask id " + id + " not in report");
  }
  VerificationReport out = report;
  ConfusionCounts c;
  for (const auto& id : report.compliant_ids) (corrupted.count(id) ? c.fn : c.tp)++;
  for (const auto& id : report.mismatched_ids) (corrupted.count(id) ? c.tn : c.fp)++;
  out.tp = c.tp;
  out.tn = c.tn;
  out.fp = c.fp;
  out.fn = c.fn;
  out.evaluated = c.tp + c.tn + c.fp + c.fn;
  out.mcc = compute_mcc(c);
  return out;
}

void write_report_text(std::ostream& out, const VerificationReport& r, std::string_view header) {
  if (!header.empty()) {
    std::istringstream lines{std::string(header)};
    std::string l;
    while (std::getline(lines, l)) out << "# " << l << '\n';
  }
  out << "channel: " << to_string(r.channel) << '\n'
      << "cardinality_only: " << (r.cardinality_only ? "true" : "false") << '\n'
      << "matched_elements: " << r.matched_elements << '\n'
      << "compliant_cardinality: " << r.compliant_cardinality << '\n'
      << "non_compliant_cardinality: " << r.non_compliant_cardinality << '\n';
  if (r.cardinality_only) return;
  out << "unmatched: " << r.unmatched_ids.size() << '\n';
  if (uses_gaze(r.channel)) {
    out << "gaze: compliant " << r.gaze.compliant << ", non_compliant " << r.gaze.non_compliant << '\n';
  }
  if (uses_pose(r.channel)) {
    out << "pose: compliant " << r.pose.compliant << ", non_compliant " << r.pose.non_compliant << '\n';
  }
  if (r.evaluated > 0) {
    const double n = static_cast<double>(r.evaluated);
    out << '\n'
        << std::left << std::setw(8) << "" << std::right << std::setw(10) << "TP" << std::setw(10)
        << "TN" << std::setw(10) << "FP" << std::setw(10) << "FN" << std::setw(10) << "MCC" << '\n'
        << std::left << std::setw(8) << "count" << std::right << std::setw(10) << r.tp
        << std::setw(10) << r.tn << std::setw(10) << r.fp << std::setw(10) << r.fn
        << std::setw(10) << std::fixed << std::setprecision(4) << r.mcc << '\n'
        << std::left << std::setw(8) << "rate" << std::right << std::setw(10) << r.tp / n
        << std::setw(10) << r.tn / n << std::setw(10) << r.fp / n << std::setw(10) << r.fn / n
        << '\n';
    out.unsetf(std::ios::floatfield);
  }
  if (!r.mismatched_ids.empty()) {
    out << "\nmismatched_ids:\n";
    for (const auto& id : r.mismatched_ids) out << "  " << id << '\n';
  }
}

std::string report_json(const VerificationReport& r) {
  nlohmann::json j = {{"channel", to_string(r.channel)},
                      {"cardinality_only", r.cardinality_only},
                      {"matched_elements", r.matched_elements},
                      {"compliant_cardinality", r.compliant_cardinality},
                      {"non_compliant_cardinality", r.non_compliant_cardinality},
                      {"unmatched", r.unmatched_ids.size()},
                      {"gaze_compliant", r.gaze.compliant},
                      {"gaze_non_compliant", r.gaze.non_compliant},
                      {"pose_compliant", r.pose.compliant},
                      {"pose_non_compliant", r.pose.non_compliant},
                      {"tp", r.tp},
                      {"tn", r.tn},
                      {"fp", r.fp},
                      {"fn", r.fn},
                      {"mcc", r.mcc},
                      {"evaluated", r.evaluated},
                      {"mismatched_ids", r.mismatched_ids}};
  return j.dump();
}

void write_consistency_text(std::ostream& out, const ConsistencyReport& r) {
  out << "pairs_checked: " << r.pair_count_checked << '\n'
      << "conflicts: " << r.conflicting_pairs.size() << '\n';
  for (const auto& p : r.conflicting_pairs) {
    out << "  " << p.first << ' ' << p.second << ' ' << to_string(p.channel) << '\n';
  }
}

}  // namespace gazecheck
