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

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "gazecheck/datagen.hpp"
#include "gazecheck/rng.hpp"
#include "gazecheck/verify.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace gazecheck;
using gazecheck::testing::error_code;

namespace {

HashedRecord rec(std::string id, std::uint8_t d, std::int32_t p, std::int32_t y) {
  HashedRecord h;
  h.sample_id = std::move(id);
  h.digest = Digest(80, Bytes{d, 0, 0, 0, 0, 0, 0, 0, 0, 1});
  h.gaze = QuantizedLabel{Channel::Gaze, p, y};
  return h;
}

std::vector<HashedRecord> hashed(const Dataset& ds, Channel ch) {
  LshConfig c;
  c.seed = 41;
  return encode_dataset(ds, ChannelEncoder(ch, c), {});
}

// Independent long-double evaluation of the textbook formula.
double mcc_oracle(long double tp, long double tn, long double fp, long double fn) {
  long double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0) return 0.0;
  return static_cast<double>((tp * tn - fp * fn) / sqrtl(den));
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Mcc, SpecifiedValues) {
  EXPECT_DOUBLE_EQ(compute_mcc({50, 50, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(compute_mcc({0, 0, 50, 50}), -1.0);
  EXPECT_NEAR(compute_mcc({40, 45, 5, 10}), 0.7035, 1e-4);
  EXPECT_EQ(compute_mcc({90, 0, 0, 10}), 0.0);
  EXPECT_EQ(compute_mcc({0, 0, 0, 0}), 0.0);
}

TEST(Mcc, RandomCountsMatchOracleAndSymmetry) {
  SplitMix64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    ConfusionCounts c{rng.below(500), rng.below(500), rng.below(500), rng.below(500)};
    double m = compute_mcc(c);
    EXPECT_NEAR(m, mcc_oracle(c.tp, c.tn, c.fp, c.fn), 1e-9);
    EXPECT_GE(m, -1.0);
    EXPECT_LE(m, 1.0);
    EXPECT_NEAR(m, compute_mcc({c.tn, c.tp, c.fn, c.fp}), 1e-12);
  }
}

TEST(VerifyLocal, ConflictRules) {
  EXPECT_TRUE(verify_local({rec("a", 1, 1, 1), rec("b", 2, 1, 1)}).conflicting_pairs.empty());
  auto rep = verify_local({rec("a", 1, 18, 13), rec("b", 1, 18, 14), rec("c", 2, 0, 0)});
  ASSERT_EQ(rep.conflicting_pairs.size(), 1u);
  EXPECT_EQ(rep.conflicting_pairs[0], (ConflictPair{"a", "b", Channel::Gaze}));
  EXPECT_EQ(rep.pair_count_checked, 1u);
  EXPECT_TRUE(verify_local({rec("a", 1, 5, 5), rec("b", 1, 5, 5)}).conflicting_pairs.empty());
}

TEST(VerifyLocal, FindsExactlyPlantedConflicts) {
  GenConfig g;
  g.n = 300;
  g.seed = 12;
  Dataset base = gen_dataset(g);
  auto base_h = hashed(base, Channel::Both);
  std::set<Digest> unique;
  for (const auto& h : base_h) unique.insert(h.digest);
  ASSERT_EQ(unique.size(), base.size()) << "base digests must be collision-free";

  // Copy 12 records under new ids, then move the copies' labels.
  auto overlap = plant_overlap(base, 0.04, 13);
  Dataset copies;
  std::map<std::string, std::string> source;
  for (const auto& [owner_id, ref_id] : overlap.mapping) source[owner_id] = ref_id;
  for (const auto& r : overlap.owner.records) {
    if (source.count(r.sample_id)) copies.records.push_back(r);
  }
  ASSERT_EQ(copies.size(), 12u);
  GenConfig cc;
  cc.seed = 14;
  cc.corruption_fraction = 1.0;
  Dataset planted = base;
  for (const auto& r : corrupt(copies, cc).first.records) planted.records.push_back(r);

  auto rep = verify_local(hashed(planted, Channel::Both));
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& p : rep.conflicting_pairs) {
    pairs.insert(std::minmax(p.first, p.second));
  }
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& [o, r] : source) expected.insert(std::minmax(o, r));
  EXPECT_EQ(pairs, expected);
  EXPECT_EQ(rep.conflicting_pairs.size(), 24u);  // gaze and pose both moved
}

TEST(VerifyPublic, IdentityCopy) {
  GenConfig g;
  g.n = 200;
  g.seed = 3;
  Dataset ds = gen_dataset(g);
  for (Channel ch : {Channel::Gaze, Channel::Pose, Channel::Both}) {
    auto h = hashed(ds, ch);
    auto rep = verify_public(h, h, ch);
    EXPECT_EQ(rep.compliant_cardinality, 200u);
    EXPECT_TRUE(rep.mismatched_ids.empty());
    EXPECT_TRUE(rep.unmatched_ids.empty());
  }
}

TEST(VerifyPublic, PlantedCorruptionsFlaggedExactly) {
  GenConfig g;
  g.n = 100;
  g.seed = 5;
  Dataset ref = gen_dataset(g);
  Dataset owner = plant_overlap(ref, 1.0, 6).owner;
  GenConfig cc;
  cc.seed = 7;
  cc.corruption_fraction = 0.1;
  auto [corrupted, mask] = corrupt(owner, cc);
  auto rep = verify_public(hashed(corrupted, Channel::Gaze), hashed(ref, Channel::Gaze), Channel::Gaze);
  EXPECT_EQ(as_set(rep.mismatched_ids), mask.ids());
  EXPECT_EQ(rep.compliant_cardinality, 90u);
  EXPECT_EQ(rep.gaze.non_compliant, 10u);
  auto scored = evaluate(rep, mask.ids());
  EXPECT_EQ(scored.tp, 90u);
  EXPECT_EQ(scored.tn, 10u);
  EXPECT_DOUBLE_EQ(scored.mcc, 1.0);
}

TEST(VerifyPublic, DisjointDigestsAllUnmatched) {
  std::vector<HashedRecord> owner{rec("a", 1, 1, 1), rec("b", 2, 1, 1)};
  std::vector<HashedRecord> ref{rec("r", 3, 1, 1), rec("s", 4, 1, 1)};
  auto rep = verify_public(owner, ref, Channel::Gaze);
  EXPECT_EQ(rep.compliant_cardinality, 0u);
  EXPECT_EQ(rep.non_compliant_cardinality, 0u);
  EXPECT_EQ(rep.unmatched_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(rep.matched_elements, 0u);
}

TEST(VerifyPublic, ReferenceLabelSlots) {
  std::vector<HashedRecord> ref{rec("r1", 1, 5, 5), rec("r2", 1, 5, 6), rec("r3", 1, 5, 5)};
  auto rep = verify_public({rec("a", 1, 5, 6), rec("b", 1, 5, 7)}, ref, Channel::Gaze);
  EXPECT_EQ(rep.compliant_ids, std::vector<std::string>{"a"});
  EXPECT_EQ(rep.mismatched_ids, std::vector<std::string>{"b"});
  EXPECT_EQ(rep.matched_elements, 1u);
}

TEST(VerifyPublic, BasisMismatchDetected) {
  DigestFile a, b;
  a.meta.lsh.seed = 1;
  b.meta.lsh.seed = 1;
  EXPECT_NO_THROW(verify_public(a, b));
  std::vector<std::pair<std::string, std::function<void(DigestFile&)>>> edits{
      {"lsh_seed", [](DigestFile& f) { f.meta.lsh.seed = 2; }},
      {"bits", [](DigestFile& f) { f.meta.lsh.bits = 64; }},
      {"lift", [](DigestFile& f) { f.meta.lsh.bandwidth_deg = 3; }},
      {"channel", [](DigestFile& f) { f.meta.channel = Channel::Pose; }},
      {"tolerances", [](DigestFile& f) { f.meta.tolerances.gaze_tol_deg = 2; }}};
  for (const auto& [field, edit] : edits) {
    DigestFile c = b;
    edit(c);
    std::string detail;
    EXPECT_EQ(error_code([&] { verify_public(a, c); }, &detail), ErrorCode::BasisMismatch);
    EXPECT_EQ(detail, field);
  }
}

TEST(Evaluate, FlagNothingScoresZero) {
  VerificationReport rep;
  std::set<std::string> corrupted;
  for (int i = 0; i < 100; ++i) {
    rep.compliant_ids.push_back("s" + std::to_string(i));
    if (i < 10) corrupted.insert("s" + std::to_string(i));
  }
  auto scored = evaluate(rep, corrupted);
  EXPECT_EQ(scored.tp, 90u);
  EXPECT_EQ(scored.fn, 10u);
  EXPECT_EQ(scored.mcc, 0.0);
}

TEST(Evaluate, MaskMustMatchReport) {
  VerificationReport rep;
  rep.compliant_ids = {"a"};
  rep.unmatched_ids = {"u"};
  EXPECT_NO_THROW(evaluate(rep, {"u"}));
  EXPECT_EQ(error_code([&] { evaluate(rep, {"zzz"}); }), ErrorCode::MaskSizeMismatch);
  rep.cardinality_only = true;
  EXPECT_EQ(error_code([&] { evaluate(rep, {}); }), ErrorCode::InvalidArgument);
}

TEST(Report, TextAndJson) {
  VerificationReport rep;
  rep.channel = Channel::Both;
  rep.compliant_ids = {"a", "b"};
  rep.mismatched_ids = {"c"};
  rep.compliant_cardinality = 2;
  rep.non_compliant_cardinality = 1;
  rep = evaluate(rep, {"c"});
  std::ostringstream out;
  write_report_text(out, rep, "gazecheck verify-public");
  std::string text = out.str();
  EXPECT_EQ(text.rfind("# gazecheck verify-public\n", 0), 0u);
  EXPECT_NE(text.find("compliant_cardinality: 2"), std::string::npos);
  EXPECT_NE(text.find("MCC"), std::string::npos);
  EXPECT_NE(text.find("pose: compliant"), std::string::npos);
  EXPECT_NE(text.find("  c\n"), std::string::npos);
  auto j = nlohmann::json::parse(report_json(rep));
  EXPECT_EQ(j["tp"], 2);
  EXPECT_EQ(j["tn"], 1);
  EXPECT_DOUBLE_EQ(j["mcc"].get<double>(), 1.0);

  VerificationReport v2;
  v2.cardinality_only = true;
  v2.compliant_cardinality = 5;
  std::ostringstream o2;
  write_report_text(o2, v2);
  EXPECT_EQ(o2.str().find("unmatched"), std::string::npos);
}
