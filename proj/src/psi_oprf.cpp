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

#include "gazecheck/psi_oprf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "gazecheck/crypto.hpp"

namespace gazecheck {

namespace {

constexpr std::string_view kCuckooDomain = "gazecheck/cuckoo";
constexpr std::string_view kPrfDomain = "gazecheck/oprf";
constexpr std::string_view kDummyDomain = "gazecheck/oprf/empty-bin";

void write_elements(ByteWriter& w, const std::vector<Bytes>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& e : v) w.raw(e);
}

std::vector<Bytes> read_elements(ByteReader& r, const Group& g) {
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * g.element_size() > r.remaining()) {
    fail(ErrorCode::TranscriptMalformed, "element list length");
  }
  std::vector<Bytes> v;
  v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto s = r.raw(g.element_size());
    v.emplace_back(s.begin(), s.end());
  }
  return v;
}

Bytes payload_blob(const SealedPayload& p) {
  ByteWriter w;
  p.write(w);
  return std::move(w).take();
}

SealedPayload read_payload_blob(ByteReader& r, const Group& g) {
  Bytes b = r.blob();
  ByteReader inner(b);
  SealedPayload p = SealedPayload::read(inner, g);
  inner.expect_done();
  return p;
}

std::string candidate_key(std::uint32_t bin, const Bytes& out) {
  std::string k(4 + out.size(), '\0');
  for (int i = 0; i < 4; ++i) k[i] = static_cast<char>(bin >> (24 - 8 * i));
  std::copy(out.begin(), out.end(), k.begin() + 4);
  return k;
}

}  // namespace

std::uint32_t cuckoo_bin(std::uint64_t seed, std::size_t bin_count, const Digest& d, int which) {
  std::uint8_t hdr[9];
  for (int i = 0; i < 8; ++i) hdr[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  hdr[8] = static_cast<std::uint8_t>(which);
  Hash256 h = sha256({as_bytes(kCuckooDomain), ByteView(hdr, 9), d.bytes()});
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | h[i];
  return static_cast<std::uint32_t>(v % bin_count);
}

std::size_t cuckoo_bin_count(std::size_t n, double expansion) {
  if (!(expansion >= 1.0)) fail(ErrorCode::InvalidArgument, "cuckoo expansion");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(expansion * static_cast<double>(n))));
}

std::optional<std::size_t> CuckooTable::lookup(const Digest& d) const {
  for (int w = 0; w < 2; ++w) {
    auto b = bin_of(d, w);
    if (bins[b] && bins[b]->item == d) return b;
  }
  for (std::size_t s = 0; s < stash.size(); ++s) {
    if (stash[s].item == d) return bins.size() + s;
  }
  return std::nullopt;
}

CuckooTable cuckoo_insert(const std::vector<Digest>& items, const CuckooParams& params) {
  CuckooTable t;
  t.params = params;
  t.bins.resize(cuckoo_bin_count(items.size(), params.expansion));
  for (std::size_t i = 0; i < items.size(); ++i) {
    CuckooEntry cur{items[i], i};
    const auto b0 = t.bin_of(cur.item, 0);
    if (!t.bins[b0]) {
      t.bins[b0] = std::move(cur);
      continue;
    }
    const auto b1 = t.bin_of(cur.item, 1);
    if (!t.bins[b1]) {
      t.bins[b1] = std::move(cur);
      continue;
    }
    std::size_t pos = b0;
    bool placed = false;
    for (std::size_t step = 0; step < params.relocation_cap && !placed; ++step) {
      std::swap(cur, *t.bins[pos]);
      const auto h0 = t.bin_of(cur.item, 0);
      const std::size_t alt = h0 == pos ? t.bin_of(cur.item, 1) : h0;
      if (!t.bins[alt]) {
        t.bins[alt] = std::move(cur);
        placed = true;
      }
      pos = alt;
    }
    if (!placed) {
      t.stash.push_back(std::move(cur));
      if (t.stash.size() > params.stash_cap) {
        fail(ErrorCode::StashOverflow, std::to_string(items.size()) + " items, stash cap " +
                                           std::to_string(params.stash_cap));
      }
    }
  }
  return t;
}

DhOprfSender::DhOprfSender(const Group& g) : g_(&g), k_(keygen(g)), pk_(g.exp_base(k_.scalar())) {}

Bytes DhOprfSender::evaluate(ByteView input) const {
  return g_->exp(g_->hash_to_group(input), k_.scalar());
}

std::vector<Bytes> DhOprfSender::respond(const std::vector<Bytes>& blinded) const {
  std::vector<Bytes> out;
  out.reserve(blinded.size());
  for (std::size_t i = 0; i < blinded.size(); ++i) {
    try {
      out.push_back(g_->exp(blinded[i], k_.scalar()));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidElement) throw;
      fail(ErrorCode::OprfFailure, "blinded[" + std::to_string(i) + "]");
    }
  }
  return out;
}

DhOprfReceiver::DhOprfReceiver(const Group& g, Bytes sender_pk)
    : g_(&g), pk_(std::move(sender_pk)), dummy_(g.hash_to_group(as_bytes(kDummyDomain))) {
  g.validate(pk_);
}

void DhOprfReceiver::prepare(std::size_t n) {
  stock_.reserve(stock_.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    PrivateKey r = keygen(*g_);
    stock_.push_back({g_->exp_base(r.scalar()), g_->exp(pk_, r.scalar())});
  }
}

std::vector<Bytes> DhOprfReceiver::blind(const std::vector<std::optional<Bytes>>& inputs) {
  if (stock_.size() < inputs.size()) prepare(inputs.size() - stock_.size());
  in_flight_.assign(stock_.end() - static_cast<std::ptrdiff_t>(inputs.size()), stock_.end());
  stock_.resize(stock_.size() - inputs.size());
  padding_.assign(inputs.size(), false);
  std::vector<Bytes> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    padding_[i] = !inputs[i].has_value();
    const Bytes h = inputs[i] ? g_->hash_to_group(*inputs[i]) : dummy_;
    out.push_back(g_->mul(h, in_flight_[i].g_r));
  }
  return out;
}

std::vector<Bytes> DhOprfReceiver::finalize(const std::vector<Bytes>& responses) {
  if (responses.size() != in_flight_.size()) {
    fail(ErrorCode::OprfFailure, "expected " + std::to_string(in_flight_.size()) + " responses, got " +
                                     std::to_string(responses.size()));
  }
  std::vector<Bytes> out(responses.size());
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (padding_[i]) continue;
    try {
      out[i] = g_->div(responses[i], in_flight_[i].pk_r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidElement) throw;
      fail(ErrorCode::OprfFailure, "response[" + std::to_string(i) + "]");
    }
  }
  in_flight_.clear();
  padding_.clear();
  return out;
}

std::size_t prf_output_bytes(std::size_t digest_bits, std::size_t sigma) {
  const std::size_t w = (digest_bits + sigma + 7) / 8;
  if (w == 0 || w > 32) fail(ErrorCode::InvalidArgument, "prf output width");
  return w;
}

Bytes prf_output(ByteView input, ByteView pre_output, std::uint32_t bin, std::size_t width) {
  if (width == 0 || width > 32) fail(ErrorCode::InvalidArgument, "prf output width");
  ByteWriter w;
  w.blob(input);
  w.raw(pre_output);
  w.u32(bin);
  Hash256 h = sha256({as_bytes(kPrfDomain), w.bytes()});
  return Bytes(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(width));
}

Bytes V4BlindedMsg::serialize() const {
  ByteWriter w;
  w.u64(table_seed);
  w.u32(bin_count);
  w.u8(output_bytes);
  write_elements(w, blinded);
  return std::move(w).take();
}

V4BlindedMsg V4BlindedMsg::parse(ByteView b, const Group& g) {
  ByteReader r(b);
  V4BlindedMsg m;
  m.table_seed = r.u64();
  m.bin_count = r.u32();
  m.output_bytes = r.u8();
  if (m.output_bytes == 0 || m.output_bytes > 32) fail(ErrorCode::TranscriptMalformed, "output width");
  m.blinded = read_elements(r, g);
  r.expect_done();
  if (m.bin_count == 0 || m.blinded.size() < m.bin_count) {
    fail(ErrorCode::TranscriptMalformed, "bin count");
  }
  return m;
}

Bytes V4ResponseMsg::serialize() const {
  ByteWriter w;
  write_elements(w, responses);
  w.u32(static_cast<std::uint32_t>(candidates.size()));
  for (const auto& c : candidates) {
    w.u32(c.bin);
    w.raw(c.output);
    w.blob(payload_blob(c.payload));
  }
  return std::move(w).take();
}

V4ResponseMsg V4ResponseMsg::parse(ByteView b, const Group& g, std::size_t output_bytes) {
  ByteReader r(b);
  V4ResponseMsg m;
  m.responses = read_elements(r, g);
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * (4 + output_bytes + 4) > r.remaining()) {
    fail(ErrorCode::TranscriptMalformed, "candidate list length");
  }
  m.candidates.resize(n);
  for (auto& c : m.candidates) {
    c.bin = r.u32();
    auto o = r.raw(output_bytes);
    c.output.assign(o.begin(), o.end());
    c.payload = read_payload_blob(r, g);
  }
  r.expect_done();
  return m;
}

Bytes V4MatchReport::serialize() const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(matches.size()));
  for (const auto& m : matches) {
    w.u32(m.candidate);
    w.blob(payload_blob(m.owner_payload));
    w.blob(payload_blob(m.reference_payload));
  }
  return std::move(w).take();
}

V4MatchReport V4MatchReport::parse(ByteView b, const Group& g) {
  ByteReader r(b);
  V4MatchReport rep;
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * 12 > r.remaining()) {
    fail(ErrorCode::TranscriptMalformed, "match list length");
  }
  rep.matches.resize(n);
  for (auto& m : rep.matches) {
    m.candidate = r.u32();
    m.owner_payload = read_payload_blob(r, g);
    m.reference_payload = read_payload_blob(r, g);
  }
  r.expect_done();
  return rep;
}

V4Reference::V4Reference(const Group& g, std::vector<HashedRecord> hashed, CuckooParams params,
                         Bytes session_nonce)
    : g_(&g), nonce_(std::move(session_nonce)) {
  if (hashed.empty()) fail(ErrorCode::EmptyReference);
  DedupResult d = dedup(hashed);
  hashed_ = std::move(d.unique);
  labels_ = std::move(d.labels);
  if (params.seed == 0) {
    auto b = random_bytes(8);
    for (auto x : b) params.seed = (params.seed << 8) | x;
    params.seed |= 1;
  }
  std::vector<Digest> items;
  items.reserve(hashed_.size());
  for (const auto& h : hashed_) items.push_back(h.digest);
  table_ = cuckoo_insert(items, params);
}

void V4Reference::prepare_offline(ByteView oprf_pk, ByteView owner_payload_pk) {
  oprf_.emplace(*g_, Bytes(oprf_pk.begin(), oprf_pk.end()));
  oprf_->prepare(table_.bins.size() + table_.params.stash_cap);
  wraps_.emplace(*g_, Bytes(owner_payload_pk.begin(), owner_payload_pk.end()));
  wraps_->fill(hashed_.size());
  std::vector<std::optional<Bytes>> inputs;
  inputs.reserve(table_.bins.size() + table_.params.stash_cap);
  for (const auto& b : table_.bins) {
    inputs.push_back(b ? std::optional<Bytes>(element_input(b->item)) : std::nullopt);
  }
  for (std::size_t s = 0; s < table_.params.stash_cap; ++s) {
    inputs.push_back(s < table_.stash.size()
                         ? std::optional<Bytes>(element_input(table_.stash[s].item))
                         : std::nullopt);
  }
  V4BlindedMsg m;
  m.table_seed = table_.params.seed;
  m.bin_count = static_cast<std::uint32_t>(table_.bins.size());
  m.output_bytes = static_cast<std::uint8_t>(table_.params.output_bytes);
  m.blinded = oprf_->blind(inputs);
  blinded_ = std::move(m);
}

const V4BlindedMsg& V4Reference::blinded_message() const {
  if (!blinded_) fail(ErrorCode::ProtocolError, "prepare_offline not called");
  return *blinded_;
}

V4MatchReport V4Reference::match(const V4ResponseMsg& resp) {
  if (!oprf_) fail(ErrorCode::ProtocolError, "prepare_offline not called");
  const std::vector<Bytes> pre = oprf_->finalize(resp.responses);

  std::unordered_map<std::string, std::vector<std::uint32_t>> by_tag;
  by_tag.reserve(resp.candidates.size());
  const std::size_t width = table_.params.output_bytes;
  for (std::uint32_t c = 0; c < resp.candidates.size(); ++c) {
    if (resp.candidates[c].output.size() != width) fail(ErrorCode::TranscriptMalformed, "output width");
    by_tag[candidate_key(resp.candidates[c].bin, resp.candidates[c].output)].push_back(c);
  }

  V4MatchReport rep;
  matched_bins_ = 0;
  auto check = [&](const CuckooEntry& e, const Bytes& v, std::initializer_list<std::uint32_t> bins) {
    const Bytes input = element_input(e.item);
    bool hit = false;
    for (auto bin : bins) {
      auto it = by_tag.find(candidate_key(bin, prf_output(input, v, bin, width)));
      if (it == by_tag.end()) continue;
      for (auto c : it->second) {
        if (!hit) ++matched_bins_;
        hit = true;
        const LabelSlots blinded = blind_labels(labels_[e.origin], blind_slots(v, nonce_));
        rep.matches.push_back({c, resp.candidates[c].payload, seal_blinded(blinded, wraps_->take())});
      }
    }
  };
  const std::size_t nb = table_.bins.size();
  for (std::size_t b = 0; b < nb; ++b) {
    if (table_.bins[b]) check(*table_.bins[b], pre[b], {static_cast<std::uint32_t>(b)});
  }
  for (std::size_t s = 0; s < table_.stash.size(); ++s) {
    const auto& e = table_.stash[s];
    const auto b0 = table_.bin_of(e.item, 0), b1 = table_.bin_of(e.item, 1);
    if (b0 == b1) {
      check(e, pre[nb + s], {b0});
    } else {
      check(e, pre[nb + s], {b0, b1});
    }
  }
  std::sort(rep.matches.begin(), rep.matches.end(),
            [](const V4Match& a, const V4Match& b) { return a.candidate < b.candidate; });
  return rep;
}

V4Owner::V4Owner(const Group& g, std::vector<HashedRecord> hashed, Bytes session_nonce,
                 VerdictOptions opt)
    : g_(&g),
      hashed_(std::move(hashed)),
      nonce_(std::move(session_nonce)),
      opt_(opt),
      oprf_(g),
      payload_(elgamal_keygen(g)),
      wraps_(g, payload_.pk) {
  require_unique(hashed_);
}

void V4Owner::prepare_offline() {
  wraps_.fill(2 * hashed_.size());
  pre_outputs_.clear();
  own_sealed_.clear();
  for (const auto& h : hashed_) {
    Bytes v = oprf_.evaluate(element_input(h.digest));
    const LabelSlots own = blind_labels(labels_of(h), blind_slots(v, nonce_));
    for (int w = 0; w < 2; ++w) own_sealed_.push_back(seal_blinded(own, wraps_.take()));
    pre_outputs_.push_back(std::move(v));
  }
}

V4ResponseMsg V4Owner::respond(const V4BlindedMsg& m) {
  if (m.bin_count == 0 || m.blinded.size() < m.bin_count) {
    fail(ErrorCode::TranscriptMalformed, "bin count");
  }
  V4ResponseMsg out;
  output_bytes_ = m.output_bytes;
  out.responses = oprf_.respond(m.blinded);

  if (pre_outputs_.size() != hashed_.size()) fail(ErrorCode::ProtocolError, "prepare_offline not called");
  std::vector<V4Candidate> cands;
  std::vector<std::size_t> item;
  cands.reserve(2 * hashed_.size());
  for (std::size_t i = 0; i < hashed_.size(); ++i) {
    const Bytes input = element_input(hashed_[i].digest);
    for (int w = 0; w < 2; ++w) {
      const auto bin = cuckoo_bin(m.table_seed, m.bin_count, hashed_[i].digest, w);
      cands.push_back({bin, prf_output(input, pre_outputs_[i], bin, output_bytes_),
                       std::move(own_sealed_[2 * i + w])});
      item.push_back(i);
    }
  }
  own_sealed_.clear();

  std::vector<std::size_t> perm(cands.size());
  std::iota(perm.begin(), perm.end(), 0);
  secure_shuffle(perm);
  out.candidates.reserve(cands.size());
  candidate_item_.assign(cands.size(), 0);
  for (std::size_t c = 0; c < perm.size(); ++c) {
    out.candidates.push_back(std::move(cands[perm[c]]));
    candidate_item_[c] = item[perm[c]];
  }
  return out;
}

PsiOutcome V4Owner::finalize(const V4MatchReport& report) const {
  PsiOutcome out;
  out.mode = OutcomeMode::ExactMatches;
  out.matched_owner_indices.emplace();
  std::set<std::size_t> seen;
  for (const auto& m : report.matches) {
    if (m.candidate >= candidate_item_.size()) {
      fail(ErrorCode::TranscriptMalformed, "candidate index " + std::to_string(m.candidate));
    }
    const std::size_t i = candidate_item_[m.candidate];
    if (!seen.insert(i).second) continue;
    ElementVerdict ev;
    ev.owner_index = i;
    ev.blind = blind_slots(pre_outputs_[i], nonce_);
    const LabelSlots own = open(*g_, m.owner_payload, payload_.sk);
    ev.reference_blinded = open(*g_, m.reference_payload, payload_.sk);
    ev.verdict = verdict(own, ev.reference_blinded, true, opt_.channel);
    if (opt_.reveal_correct_label) {
      try {
        ev.revealed = unblind_labels(ev.reference_blinded, ev.blind);
      } catch (const Error&) {
        ev.revealed.reset();
      }
    }
    out.verdicts.push_back(std::move(ev));
  }
  std::sort(out.verdicts.begin(), out.verdicts.end(),
            [](const ElementVerdict& a, const ElementVerdict& b) { return a.owner_index < b.owner_index; });
  for (const auto& v : out.verdicts) out.matched_owner_indices->push_back(v.owner_index);
  out.match_count = out.verdicts.size();
  finish_outcome(out, opt_);
  return out;
}

PsiOutcome v4_run(const std::vector<HashedRecord>& owner, const std::vector<HashedRecord>& reference,
                  const Group& g, CuckooParams params, const VerdictOptions& opt) {
  Bytes nonce = random_bytes(kSessionNonceSize);
  V4Reference ref(g, reference, params, nonce);
  V4Owner own(g, owner, nonce, opt);
  own.prepare_offline();
  ref.prepare_offline(own.oprf_public_key(), own.payload_public_key());
  auto m1 = V4BlindedMsg::parse(ref.blinded_message().serialize(), g);
  auto m2 = V4ResponseMsg::parse(own.respond(m1).serialize(), g, m1.output_bytes);
  auto m3 = V4MatchReport::parse(ref.match(m2).serialize(), g);
  return own.finalize(m3);
}

}  // namespace gazecheck
