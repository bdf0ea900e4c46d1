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

#include <cmath>
#include <set>

#include "gazecheck/crypto.hpp"
#include "gazecheck/psi_dh.hpp"
#include "gazecheck/psi_oprf.hpp"
#include "gazecheck/rng.hpp"
#include "support.hpp"

using namespace gazecheck;
using gazecheck::testing::error_code;

namespace {

const Group& G() { return group_for(GroupId::P256); }

Digest digest_of(std::uint64_t v) {
  Bytes b(10, 0);
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
  b[9] = 0x3c;
  return Digest(80, b);
}

HashedRecord rec(std::string id, std::uint64_t d, std::int32_t p = 1, std::int32_t y = 1) {
  HashedRecord h;
  h.sample_id = std::move(id);
  h.digest = digest_of(d);
  h.gaze = QuantizedLabel{Channel::Gaze, p, y};
  return h;
}

std::vector<HashedRecord> range_set(std::uint64_t lo, std::uint64_t hi, const std::string& prefix) {
  std::vector<HashedRecord> out;
  for (auto v = lo; v < hi; ++v) out.push_back(rec(prefix + std::to_string(v), v));
  return out;
}

struct V4Run {
  V4ResponseMsg response;
  V4MatchReport report;
  PsiOutcome outcome;
  CuckooTable table;
  std::size_t matched_bins = 0;
};

V4Run run_v4(const std::vector<HashedRecord>& owner, const std::vector<HashedRecord>& ref,
             CuckooParams params = {}) {
  Bytes nonce = random_bytes(kSessionNonceSize);
  V4Reference r(G(), ref, params, nonce);
  V4Owner o(G(), owner, nonce);
  o.prepare_offline();
  r.prepare_offline(o.oprf_public_key(), o.payload_public_key());
  V4Run out;
  auto blinded = V4BlindedMsg::parse(r.blinded_message().serialize(), G());
  out.response = o.respond(blinded);
  out.report = r.match(V4ResponseMsg::parse(out.response.serialize(), G(), blinded.output_bytes));
  out.outcome = o.finalize(V4MatchReport::parse(out.report.serialize(), G()));
  out.table = r.table();
  out.matched_bins = r.matched_bins();
  return out;
}

std::vector<Digest> digests(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::set<std::uint64_t> seen;
  std::vector<Digest> out;
  while (out.size() < n) {
    auto v = rng.next();
    if (seen.insert(v).second) out.push_back(digest_of(v));
  }
  return out;
}

}  // namespace

TEST(Cuckoo, SingleItemTakesFirstBin) {
  CuckooParams p;
  p.seed = 99;
  Digest d = digest_of(5);
  CuckooTable t = cuckoo_insert({d}, p);
  EXPECT_EQ(t.bins.size(), 3u);  // ceil(2.4)
  ASSERT_TRUE(t.bins[t.bin_of(d, 0)]);
  EXPECT_EQ(t.bins[t.bin_of(d, 0)]->item, d);
  EXPECT_EQ(t.lookup(d), t.bin_of(d, 0));
}

TEST(Cuckoo, StashStaysSmallAtThousandItems) {
  constexpr int kTrials = 1000;
  int ok = 0;
  std::size_t max_stash = 0;
  for (int t = 0; t < kTrials; ++t) {
    CuckooParams p;
    p.seed = 1 + t;
    p.stash_cap = 1000;
    auto table = cuckoo_insert(digests(1000, t), p);
    ok += table.stash.size() <= 4;
    max_stash = std::max(max_stash, table.stash.size());
  }
  EXPECT_GE(ok, 999) << "max stash " << max_stash;
}

TEST(Cuckoo, EveryItemFoundWhereAllowed) {
  CuckooParams p;
  p.seed = 7;
  auto items = digests(2000, 3);
  auto t = cuckoo_insert(items, p);
  std::size_t occupied = 0;
  for (const auto& b : t.bins) occupied += b.has_value();
  EXPECT_EQ(occupied + t.stash.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto where = t.lookup(items[i]);
    ASSERT_TRUE(where) << i;
    if (*where < t.bins.size()) {
      EXPECT_TRUE(*where == t.bin_of(items[i], 0) || *where == t.bin_of(items[i], 1));
      EXPECT_EQ(t.bins[*where]->origin, i);
    } else {
      EXPECT_EQ(t.stash[*where - t.bins.size()].origin, i);
    }
  }
  EXPECT_FALSE(t.lookup(digest_of(0xffff)));
}

TEST(Cuckoo, OverflowReported) {
  CuckooParams p;
  p.seed = 5;
  p.expansion = 1.0;
  p.relocation_cap = 2;
  p.stash_cap = 0;
  EXPECT_EQ(error_code([&] { cuckoo_insert(digests(200, 1), p); }), ErrorCode::StashOverflow);
  p.expansion = 0.5;
  EXPECT_EQ(error_code([&] { cuckoo_insert(digests(2, 1), p); }), ErrorCode::InvalidArgument);
}

TEST(Prf, OutputWidth) {
  EXPECT_EQ(prf_output_bytes(80, 40), 15u);
  EXPECT_EQ(prf_output_bytes(64, 40), 13u);
  EXPECT_EQ(prf_output(as_bytes("x"), as_bytes("pre"), 3).size(), 15u);
  EXPECT_NE(prf_output(as_bytes("x"), as_bytes("pre"), 3), prf_output(as_bytes("x"), as_bytes("pre"), 4));
  EXPECT_EQ(error_code([] { prf_output(as_bytes("x"), as_bytes("p"), 0, 33); }),
            ErrorCode::InvalidArgument);
}

TEST(Oprf, ReceiverLearnsSenderPrf) {
  DhOprfSender s(G());
  DhOprfReceiver r(G(), s.public_key());
  r.prepare(3);
  std::vector<std::optional<Bytes>> inputs{Bytes{1, 2}, std::nullopt, Bytes{3}};
  auto blinded = r.blind(inputs);
  ASSERT_EQ(blinded.size(), 3u);
  EXPECT_NE(blinded[0], s.evaluate(Bytes{1, 2}));
  auto out = r.finalize(s.respond(blinded));
  EXPECT_EQ(out[0], s.evaluate(Bytes{1, 2}));
  EXPECT_TRUE(out[1].empty());
  EXPECT_EQ(out[2], s.evaluate(Bytes{3}));
  r.prepare(1);
  r.blind({Bytes{1}});
  EXPECT_EQ(error_code([&] { r.finalize({}); }), ErrorCode::OprfFailure);
}

TEST(V4, SpecifiedIntersection) {
  std::vector<HashedRecord> owner{rec("a", 1), rec("b", 2, 18, 13), rec("c", 3, 18, 13)};
  std::vector<HashedRecord> ref{rec("rb", 2, 18, 13), rec("rc", 3, 18, 14), rec("rd", 4)};
  auto r = run_v4(owner, ref);
  EXPECT_EQ(r.outcome.match_count, 2u);
  EXPECT_EQ(*r.outcome.matched_owner_indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(r.outcome.compliant_count, 1u);
  EXPECT_EQ(r.outcome.non_compliant_count, 1u);
  EXPECT_EQ(r.matched_bins, 2u);
  EXPECT_EQ(r.response.candidates.size(), 6u);
  EXPECT_EQ(v4_run(owner, ref, G()).match_count, 2u);
}

TEST(V4, DisjointLargeSets) {
  auto r = run_v4(range_set(0, 1024, "o"), range_set(5000, 6024, "r"));
  EXPECT_EQ(r.outcome.match_count, 0u);
  EXPECT_EQ(r.matched_bins, 0u);
}

TEST(V4, AgreesWithV1) {
  SplitMix64 rng(8);
  for (int t = 0; t < 10; ++t) {
    std::vector<HashedRecord> owner, ref;
    for (std::uint64_t v = 0; v < 60; ++v) {
      if (rng.below(2)) owner.push_back(rec("o" + std::to_string(v), v, 1, int(rng.below(2))));
      if (rng.below(2)) ref.push_back(rec("r" + std::to_string(v), v, 1, int(rng.below(2))));
    }
    if (ref.empty()) continue;
    PsiOutcome v4 = run_v4(owner, ref).outcome;
    DhOwnerKeys ok = make_owner_keys(G());
    DhReferenceKeys rk = make_reference_keys(G());
    Bytes nonce(kSessionNonceSize, 1);
    Msg1 m1 = owner_round1(owner, ok.k, G(), {nonce, false});
    Msg2 m2 = reference_round2(m1, ref, rk, G(), false, {ok.payload.pk});
    PsiOutcome v1 = owner_finalize(m2, ok, owner, G(), m1);
    EXPECT_EQ(v4.matched_owner_indices, v1.matched_owner_indices);
    EXPECT_EQ(summarize(v4), summarize(v1));
  }
}

TEST(V4, SecondBinAndStashItemsStillMatch) {
  auto ref = range_set(0, 300, "r");
  CuckooParams p;
  p.seed = 12345;
  p.expansion = 1.05;
  p.relocation_cap = 20;
  p.stash_cap = 300;
  auto r = run_v4(ref, ref, p);
  std::size_t at_h2 = 0;
  for (std::size_t b = 0; b < r.table.bins.size(); ++b) {
    const auto& e = r.table.bins[b];
    if (e && r.table.bin_of(e->item, 0) != b) ++at_h2;
  }
  EXPECT_GT(at_h2, 0u);
  EXPECT_GT(r.table.stash.size(), 0u);
  EXPECT_EQ(r.outcome.match_count, 300u);
  EXPECT_EQ(r.outcome.compliant_count, 300u);
}

TEST(V4, OutputWidthFollowsParams) {
  CuckooParams p;
  p.output_bytes = 20;
  auto r = run_v4({rec("a", 1)}, {rec("r", 1)}, p);
  EXPECT_EQ(r.response.candidates[0].output.size(), 20u);
  EXPECT_EQ(r.outcome.match_count, 1u);
}

TEST(V4, OwnerMustPrepareOffline) {
  Bytes nonce(kSessionNonceSize, 1);
  V4Reference r(G(), {rec("r", 1)}, {}, nonce);
  V4Owner o(G(), {rec("a", 1)}, nonce);
  r.prepare_offline(o.oprf_public_key(), o.payload_public_key());
  EXPECT_NE(error_code([&] { o.respond(r.blinded_message()); }), std::nullopt);
  EXPECT_EQ(error_code([] { V4Reference(G(), {}, {}, Bytes(16, 0)); }), ErrorCode::EmptyReference);
}

TEST(V4, BlindedMessageSizeIndependentOfFill) {
  CuckooParams p;
  p.seed = 3;
  Bytes nonce(kSessionNonceSize, 1);
  V4Reference r(G(), range_set(0, 100, "r"), p, nonce);
  V4Owner o(G(), {rec("a", 1)}, nonce);
  r.prepare_offline(o.oprf_public_key(), o.payload_public_key());
  EXPECT_EQ(r.blinded_message().blinded.size(), r.table().bins.size() + kDefaultStashCap);
}

// Smoke check, not a proof: candidate outputs of non-matching items should
// look like uniform bits to the reference.
TEST(V4, NonMatchingCandidatesLookUniform) {
  auto r = run_v4(range_set(0, 1000, "o"), range_set(9000, 9100, "r"));
  std::vector<int> bits;
  for (const auto& c : r.response.candidates) {
    for (auto byte : c.output) {
      for (int i = 7; i >= 0; --i) bits.push_back((byte >> i) & 1);
    }
  }
  const double n = static_cast<double>(bits.size());
  double ones = 0;
  for (int b : bits) ones += b;
  // Monobit (NIST SP 800-22 2.1).
  const double s_obs = std::fabs(2 * ones - n) / std::sqrt(n);
  EXPECT_GT(std::erfc(s_obs / std::sqrt(2.0)), 0.001);
  // Runs (NIST SP 800-22 2.3).
  const double pi = ones / n;
  std::size_t runs = 1;
  for (std::size_t i = 1; i < bits.size(); ++i) runs += bits[i] != bits[i - 1];
  const double num = std::fabs(runs - 2 * n * pi * (1 - pi));
  const double den = 2 * std::sqrt(2 * n) * pi * (1 - pi);
  EXPECT_GT(std::erfc(num / den), 0.001);
}
