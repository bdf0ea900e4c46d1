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

#include "gazecheck/psi_dh.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "gazecheck/crypto.hpp"

namespace gazecheck {

namespace {

constexpr std::string_view kPublishedMagic = "QEV3";
constexpr std::string_view kKeyMagic = "QEK3";

struct BytesHash {
  std::size_t operator()(const Bytes& b) const noexcept {
    // Elements are uniformly distributed; their tail bytes are already mixed.
    std::size_t h = 0;
    for (std::size_t i = b.size() >= 8 ? b.size() - 8 : 0; i < b.size(); ++i) h = (h << 8) | b[i];
    return h;
  }
};

using ElementIndex = std::unordered_map<Bytes, std::size_t, BytesHash>;

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

/// elem^k for every entry, reporting the first bad index.
std::vector<Bytes> exp_all(const Group& g, const std::vector<Bytes>& in, ByteView k,
                           const char* what) {
  std::vector<Bytes> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    try {
      out.push_back(g.exp(in[i], k));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidElement) throw;
      fail(ErrorCode::InvalidElement, std::string(what) + "[" + std::to_string(i) + "]");
    }
  }
  return out;
}

ElementIndex index_of(const std::vector<Bytes>& v) {
  ElementIndex idx;
  idx.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) idx.emplace(v[j], j);
  return idx;
}

std::size_t intersection_size(const std::vector<Bytes>& a, const std::vector<Bytes>& b) {
  ElementIndex idx = index_of(b);
  return static_cast<std::size_t>(
      std::count_if(a.begin(), a.end(), [&](const Bytes& x) { return idx.count(x) != 0; }));
}

}  // namespace

DhOwnerKeys make_owner_keys(const Group& g) { return {keygen(g), elgamal_keygen(g)}; }

DhReferenceKeys make_reference_keys(const Group& g) { return {keygen(g), keygen(g)}; }

Bytes Msg1::serialize() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(group));
  w.blob(session_nonce);
  write_elements(w, a);
  write_elements(w, a_folded);
  return std::move(w).take();
}

Msg1 Msg1::parse(ByteView b) {
  ByteReader r(b);
  Msg1 m;
  m.group = group_id_from_byte(r.u8());
  const Group& g = group_for(m.group);
  m.session_nonce = r.blob();
  m.a = read_elements(r, g);
  m.a_folded = read_elements(r, g);
  r.expect_done();
  return m;
}

Bytes Msg2::serialize(const Group& g) const {
  (void)g;
  ByteWriter w;
  w.u8(shuffled ? 1 : 0);
  write_elements(w, b);
  w.u32(static_cast<std::uint32_t>(q.size()));
  for (const auto& p : q) p.write(w);
  write_elements(w, a_prime);
  write_elements(w, c);
  write_elements(w, b_folded);
  write_elements(w, a_folded_prime);
  w.u32(static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) write_slots(w, t);
  w.blob(token_nonce);
  return std::move(w).take();
}

Msg2 Msg2::parse(ByteView bytes, const Group& g) {
  ByteReader r(bytes);
  Msg2 m;
  const auto flag = r.u8();
  if (flag > 1) fail(ErrorCode::TranscriptMalformed, "shuffled flag");
  m.shuffled = flag == 1;
  m.b = read_elements(r, g);
  const std::uint32_t nq = r.u32();
  if (static_cast<std::size_t>(nq) * (2 * g.element_size() + sizeof(SealedPayload::body) + 32) >
      r.remaining()) {
    fail(ErrorCode::TranscriptMalformed, "payload list length");
  }
  m.q.reserve(nq);
  for (std::uint32_t i = 0; i < nq; ++i) m.q.push_back(SealedPayload::read(r, g));
  m.a_prime = read_elements(r, g);
  m.c = read_elements(r, g);
  m.b_folded = read_elements(r, g);
  m.a_folded_prime = read_elements(r, g);
  const std::uint32_t nt = r.u32();
  if (static_cast<std::size_t>(nt) * kLabelBlockSize * kLabelSlots > r.remaining()) {
    fail(ErrorCode::TranscriptMalformed, "token list length");
  }
  m.tokens.resize(nt);
  for (auto& t : m.tokens) t = read_slots(r);
  m.token_nonce = r.blob();
  r.expect_done();
  return m;
}

Msg1 owner_round1(const std::vector<HashedRecord>& hashed, const PrivateKey& k_o, const Group& g,
                  const Round1Options& opt) {
  require_unique(hashed);
  Msg1 m;
  m.group = g.id();
  m.session_nonce = opt.session_nonce;
  m.a.reserve(hashed.size());
  for (const auto& h : hashed) m.a.push_back(g.exp(g.hash_to_group(element_input(h.digest)), k_o.scalar()));
  if (opt.folded) {
    m.a_folded.reserve(hashed.size());
    for (const auto& h : hashed) {
      m.a_folded.push_back(g.exp(g.hash_to_group(folded_input(h)), k_o.scalar()));
    }
  }
  return m;
}

ReferencePrecomp precompute_reference(const std::vector<HashedRecord>& hashed_ref,
                                      const DhReferenceKeys& keys, const Group& g, bool folded) {
  DedupResult d = dedup(hashed_ref);
  ReferencePrecomp p;
  p.b.reserve(d.unique.size());
  for (std::size_t k = 0; k < d.unique.size(); ++k) {
    Bytes e = g.hash_to_group(element_input(d.unique[k].digest));
    p.b.push_back(g.exp(e, keys.k.scalar()));
    if (folded) {
      HashedRecord h = d.unique[k];
      for (const auto& l : d.labels[k]) {
        h.gaze = l.gaze;
        h.pose = l.pose;
        p.b_folded.push_back(g.exp(g.hash_to_group(folded_input(h)), keys.k.scalar()));
      }
    } else {
      p.shared.push_back(g.exp(e, keys.k_label.scalar()));
    }
  }
  p.labels = std::move(d.labels);
  return p;
}

Msg2 reference_round2(const Msg1& m1, const std::vector<HashedRecord>& hashed_ref,
                      const DhReferenceKeys& keys, const Group& g, bool shuffle,
                      const Round2Options& opt) {
  if (hashed_ref.empty()) fail(ErrorCode::EmptyReference);
  if (m1.group != g.id()) fail(ErrorCode::ModeMismatch, "group " + to_string(m1.group));
  ReferencePrecomp local;
  const ReferencePrecomp* pre = opt.precomp;
  if (!pre) {
    local = precompute_reference(hashed_ref, keys, g, shuffle);
    pre = &local;
  }

  Msg2 m;
  m.shuffled = shuffle;
  m.b = pre->b;
  m.a_prime = exp_all(g, m1.a, keys.k.scalar(), "a");
  if (shuffle) {
    secure_shuffle(m.a_prime);
    if (!m1.a_folded.empty()) {
      if (m1.a_folded.size() != m1.a.size()) fail(ErrorCode::TranscriptMalformed, "folded list");
      m.a_folded_prime = exp_all(g, m1.a_folded, keys.k.scalar(), "a_folded");
      secure_shuffle(m.a_folded_prime);
      m.b_folded = pre->b_folded;
      secure_shuffle(m.b_folded);
    }
    return m;
  }

  if (m1.session_nonce.size() != kSessionNonceSize) {
    fail(ErrorCode::TranscriptMalformed, "session nonce");
  }
  if (pre->shared.size() != pre->b.size()) fail(ErrorCode::InvalidArgument, "precomp");
  m.c = exp_all(g, m1.a, keys.k_label.scalar(), "a");
  m.q.reserve(pre->b.size());
  for (std::size_t j = 0; j < pre->b.size(); ++j) {
    const LabelSlots blinded = blind_labels(pre->labels[j], blind_slots(pre->shared[j], m1.session_nonce));
    KeyWrap wrap = opt.wraps ? opt.wraps->take() : make_wrap(g, opt.owner_payload_pk);
    m.q.push_back(seal_blinded(blinded, wrap));
  }
  return m;
}

PsiOutcome owner_finalize(const Msg2& m2, const DhOwnerKeys& keys,
                          const std::vector<HashedRecord>& hashed, const Group& g,
                          const Msg1& m1, const FinalizeOptions& opt) {
  if (m2.shuffled != opt.expect_shuffled) {
    fail(ErrorCode::ModeMismatch, m2.shuffled ? "unexpected shuffled response" : "response not shuffled");
  }
  if (m2.a_prime.size() != hashed.size()) fail(ErrorCode::TranscriptMalformed, "a_prime length");

  PsiOutcome out;
  const std::vector<Bytes> b_prime = exp_all(g, m2.b, keys.k.scalar(), "b");

  if (m2.shuffled) {
    out.mode = OutcomeMode::CardinalityOnly;
    out.match_count = intersection_size(m2.a_prime, b_prime);
    if (!m2.a_folded_prime.empty() || !m2.b_folded.empty()) {
      auto bf = exp_all(g, m2.b_folded, keys.k.scalar(), "b_folded");
      out.compliant_count = intersection_size(m2.a_folded_prime, bf);
      if (out.compliant_count > out.match_count) {
        fail(ErrorCode::TranscriptMalformed, "compliant count exceeds matches");
      }
      out.non_compliant_count = out.match_count - out.compliant_count;
    }
    return out;
  }

  const bool published = !m2.tokens.empty() || (m2.q.empty() && !m2.b.empty());
  if (m2.c.size() != m2.a_prime.size()) fail(ErrorCode::TranscriptMalformed, "label channel length");
  if (published ? m2.tokens.size() != m2.b.size() : m2.q.size() != m2.b.size()) {
    fail(ErrorCode::TranscriptMalformed, "payload list length");
  }
  const ByteView nonce = published ? ByteView(m2.token_nonce) : ByteView(m1.session_nonce);

  ElementIndex idx = index_of(b_prime);
  out.mode = OutcomeMode::ExactMatches;
  out.matched_owner_indices.emplace();
  Bytes k_inv;
  for (std::size_t i = 0; i < m2.a_prime.size(); ++i) {
    auto it = idx.find(m2.a_prime[i]);
    if (it == idx.end()) continue;
    const std::size_t j = it->second;
    if (k_inv.empty()) k_inv = g.scalar_inverse(keys.k.scalar());
    Bytes shared = g.exp(m2.c[i], k_inv);

    ElementVerdict ev;
    ev.owner_index = i;
    ev.blind = blind_slots(shared, nonce);
    ev.reference_blinded = published ? m2.tokens[j] : open(g, m2.q[j], keys.payload.sk);
    const LabelSlots own = blind_labels(labels_of(hashed[i]), ev.blind);
    ev.verdict = verdict(own, ev.reference_blinded, true, opt.verdicts.channel);
    if (opt.verdicts.reveal_correct_label) {
      try {
        ev.revealed = unblind_labels(ev.reference_blinded, ev.blind);
      } catch (const Error&) {
        ev.revealed.reset();
      }
    }
    out.matched_owner_indices->push_back(i);
    out.verdicts.push_back(std::move(ev));
  }
  secure_zero(k_inv);
  out.match_count = out.matched_owner_indices->size();
  finish_outcome(out, opt.verdicts);
  return out;
}

Bytes PublishedReferenceSet::serialize() const {
  ByteWriter w;
  w.raw(as_bytes(kPublishedMagic));
  w.u8(format_version);
  w.u8(static_cast<std::uint8_t>(group));
  w.u16(bits);
  w.u8(static_cast<std::uint8_t>(channel));
  w.blob(nonce);
  w.u32(static_cast<std::uint32_t>(b.size()));
  for (std::size_t j = 0; j < b.size(); ++j) {
    w.blob(b[j]);
    write_slots(w, tokens[j]);
  }
  return std::move(w).take();
}

PublishedReferenceSet PublishedReferenceSet::parse(ByteView bytes) {
  ByteReader r(bytes);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kPublishedMagic.begin())) {
    fail(ErrorCode::TranscriptMalformed, "published set magic");
  }
  PublishedReferenceSet s;
  s.format_version = r.u8();
  if (s.format_version != kFormatVersion) {
    fail(ErrorCode::VersionMismatch, "published set format " + std::to_string(s.format_version));
  }
  s.group = group_id_from_byte(r.u8());
  s.bits = r.u16();
  const auto ch = r.u8();
  if (ch > 2) fail(ErrorCode::TranscriptMalformed, "channel");
  s.channel = static_cast<Channel>(ch);
  s.nonce = r.blob();
  const Group& g = group_for(s.group);
  const std::uint32_t n = r.u32();
  for (std::uint32_t j = 0; j < n; ++j) {
    Bytes e = r.blob();
    g.validate(e);
    s.b.push_back(std::move(e));
    s.tokens.push_back(read_slots(r));
  }
  r.expect_done();
  return s;
}

PublishedReferenceSet publish_reference(const std::vector<HashedRecord>& hashed_ref,
                                        const DhReferenceKeys& keys, const Group& g,
                                        Channel channel) {
  if (hashed_ref.empty()) fail(ErrorCode::EmptyReference);
  ReferencePrecomp pre = precompute_reference(hashed_ref, keys, g, false);
  PublishedReferenceSet s;
  s.group = g.id();
  s.bits = static_cast<std::uint16_t>(hashed_ref.front().digest.width());
  s.channel = channel;
  s.nonce = random_bytes(kSessionNonceSize);
  s.b = std::move(pre.b);
  s.tokens.reserve(s.b.size());
  for (std::size_t j = 0; j < s.b.size(); ++j) {
    s.tokens.push_back(blind_labels(pre.labels[j], blind_slots(pre.shared[j], s.nonce)));
  }
  return s;
}

Msg2 v3_online(const Msg1& m1, const PublishedReferenceSet& published, const DhReferenceKeys& keys,
               const Group& g, std::uint8_t session_format_version) {
  if (published.format_version != session_format_version) {
    fail(ErrorCode::VersionMismatch, "published format " + std::to_string(published.format_version));
  }
  if (published.group != g.id() || m1.group != g.id()) {
    fail(ErrorCode::VersionMismatch, "published group " + to_string(published.group));
  }
  Msg2 m;
  m.b = published.b;
  m.tokens = published.tokens;
  m.token_nonce = published.nonce;
  m.a_prime = exp_all(g, m1.a, keys.k.scalar(), "a");
  m.c = exp_all(g, m1.a, keys.k_label.scalar(), "a");
  return m;
}

void write_published_set(const std::string& path, const PublishedReferenceSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  Bytes b = set.serialize();
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) fail(ErrorCode::IoError, "short write " + path);
}

PublishedReferenceSet read_published_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return PublishedReferenceSet::parse(b);
}

Bytes serialize_reference_keys(const DhReferenceKeys& keys, GroupId group) {
  ByteWriter w;
  w.raw(as_bytes(kKeyMagic));
  w.u8(static_cast<std::uint8_t>(group));
  w.blob(keys.k.scalar());
  w.blob(keys.k_label.scalar());
  return std::move(w).take();
}

DhReferenceKeys parse_reference_keys(ByteView b, GroupId expected) {
  ByteReader r(b);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kKeyMagic.begin())) {
    fail(ErrorCode::TranscriptMalformed, "key file magic");
  }
  if (group_id_from_byte(r.u8()) != expected) fail(ErrorCode::VersionMismatch, "key file group");
  const Group& g = group_for(expected);
  DhReferenceKeys k{PrivateKey(r.blob()), PrivateKey(r.blob())};
  r.expect_done();
  if (!g.scalar_in_range(k.k.scalar()) || !g.scalar_in_range(k.k_label.scalar())) {
    fail(ErrorCode::TranscriptMalformed, "key out of range");
  }
  return k;
}

}  // namespace gazecheck
