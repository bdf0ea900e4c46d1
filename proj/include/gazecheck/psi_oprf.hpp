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
#include <vector>

#include "gazecheck/group.hpp"
#include "gazecheck/psi.hpp"

namespace gazecheck {

inline constexpr std::size_t kDefaultStashCap = 12;
inline constexpr std::size_t kPrfOutputBytes = 15;  // 80-bit digest + 40 statistical bits

/// ceil((digest bits + sigma) / 8), at most 32.
std::size_t prf_output_bytes(std::size_t digest_bits, std::size_t sigma);

struct CuckooParams {
  double expansion = 2.4;
  std::size_t relocation_cap = 500;
  std::size_t stash_cap = kDefaultStashCap;
  std::uint64_t seed = 0;
  std::size_t output_bytes = kPrfOutputBytes;
};

struct CuckooEntry {
  Digest item;
  std::size_t origin = 0;
};

/// Bin for hash function `which` (0 or 1).
std::uint32_t cuckoo_bin(std::uint64_t seed, std::size_t bin_count, const Digest& d, int which);

std::size_t cuckoo_bin_count(std::size_t n, double expansion);

struct CuckooTable {
  CuckooParams params;
  std::vector<std::optional<CuckooEntry>> bins;
  std::vector<CuckooEntry> stash;

  std::uint32_t bin_of(const Digest& d, int which) const {
    return cuckoo_bin(params.seed, bins.size(), d, which);
  }
  /// Bin index, or bins.size() + k for stash slot k.
  std::optional<std::size_t> lookup(const Digest& d) const;
};

/// Random-walk insertion: an item goes to h1 or h2 if free, otherwise evicts
/// the occupant of h1 and the chain continues from the evicted item's other
/// bin. Chains longer than relocation_cap end in the stash.
CuckooTable cuckoo_insert(const std::vector<Digest>& items, const CuckooParams& params);

/// Two-party PRF with a sender-held key. The DH instantiation computes
/// F_k(x) from H(x)^k; receivers blind multiplicatively, H(x) g^r, so the
/// per-item blinding pairs (g^r, pk^r) can be produced ahead of time.
class OprfSender {
 public:
  virtual ~OprfSender() = default;
  virtual Bytes public_key() const = 0;
  /// Pre-output H(x)^k for the sender's own inputs.
  virtual Bytes evaluate(ByteView input) const = 0;
  virtual std::vector<Bytes> respond(const std::vector<Bytes>& blinded) const = 0;
};

class OprfReceiver {
 public:
  virtual ~OprfReceiver() = default;
  /// Makes `n` input-independent blinding pairs.
  virtual void prepare(std::size_t n) = 0;
  /// Blinds inputs (nullopt marks a padding slot) using one pair each.
  virtual std::vector<Bytes> blind(const std::vector<std::optional<Bytes>>& inputs) = 0;
  /// Pre-outputs in input order; padding slots come back empty.
  virtual std::vector<Bytes> finalize(const std::vector<Bytes>& responses) = 0;
};

class DhOprfSender final : public OprfSender {
 public:
  explicit DhOprfSender(const Group& g);
  Bytes public_key() const override { return pk_; }
  Bytes evaluate(ByteView input) const override;
  std::vector<Bytes> respond(const std::vector<Bytes>& blinded) const override;

 private:
  const Group* g_;
  PrivateKey k_;
  Bytes pk_;
};

class DhOprfReceiver final : public OprfReceiver {
 public:
  DhOprfReceiver(const Group& g, Bytes sender_pk);
  void prepare(std::size_t n) override;
  std::vector<Bytes> blind(const std::vector<std::optional<Bytes>>& inputs) override;
  std::vector<Bytes> finalize(const std::vector<Bytes>& responses) override;

 private:
  struct Pair {
    Bytes g_r;
    Bytes pk_r;
  };
  const Group* g_;
  Bytes pk_;
  Bytes dummy_;
  std::vector<Pair> stock_;
  std::vector<Pair> in_flight_;
  std::vector<bool> padding_;
};

/// F(x, bin) = SHA-256(domain || x || H(x)^k || bin) truncated to `width` bytes.
Bytes prf_output(ByteView input, ByteView pre_output, std::uint32_t bin,
                 std::size_t width = kPrfOutputBytes);

struct V4BlindedMsg {
  std::uint64_t table_seed = 0;
  std::uint32_t bin_count = 0;
  std::uint8_t output_bytes = kPrfOutputBytes;
  std::vector<Bytes> blinded;  // bin_count + stash_cap entries

  Bytes serialize() const;
  static V4BlindedMsg parse(ByteView b, const Group& g);
};

struct V4Candidate {
  std::uint32_t bin = 0;
  Bytes output;
  SealedPayload payload;
};

struct V4ResponseMsg {
  std::vector<Bytes> responses;
  std::vector<V4Candidate> candidates;  // two per owner item, permuted

  Bytes serialize() const;
  /// `output_bytes` is the width announced in the blinded message.
  static V4ResponseMsg parse(ByteView b, const Group& g, std::size_t output_bytes = kPrfOutputBytes);
};

struct V4Match {
  std::uint32_t candidate = 0;
  SealedPayload owner_payload;
  SealedPayload reference_payload;
};

struct V4MatchReport {
  std::vector<V4Match> matches;

  Bytes serialize() const;
  static V4MatchReport parse(ByteView b, const Group& g);
};

/// Reference side (cuckoo table holder, OPRF receiver).
class V4Reference {
 public:
  V4Reference(const Group& g, std::vector<HashedRecord> hashed, CuckooParams params,
              Bytes session_nonce);

  /// Blinded bins and payload wraps; independent of the owner's input.
  void prepare_offline(ByteView oprf_pk, ByteView owner_payload_pk);
  const V4BlindedMsg& blinded_message() const;
  V4MatchReport match(const V4ResponseMsg& resp);

  const CuckooTable& table() const { return table_; }
  /// Reference elements whose bin tag appeared among the candidates.
  std::size_t matched_bins() const { return matched_bins_; }

 private:
  const Group* g_;
  std::vector<HashedRecord> hashed_;
  std::vector<std::vector<LabelSet>> labels_;
  CuckooTable table_;
  Bytes nonce_;
  std::optional<DhOprfReceiver> oprf_;
  std::optional<WrapPool> wraps_;
  std::optional<V4BlindedMsg> blinded_;
  std::size_t matched_bins_ = 0;
};

/// Owner side (OPRF key holder, payload recipient).
class V4Owner {
 public:
  V4Owner(const Group& g, std::vector<HashedRecord> hashed, Bytes session_nonce,
          VerdictOptions opt = {});

  Bytes oprf_public_key() const { return oprf_.public_key(); }
  const Bytes& payload_public_key() const { return payload_.pk; }
  /// Own PRF values and two sealed self-payloads per item.
  void prepare_offline();
  V4ResponseMsg respond(const V4BlindedMsg& m);
  PsiOutcome finalize(const V4MatchReport& report) const;

 private:
  const Group* g_;
  std::vector<HashedRecord> hashed_;
  Bytes nonce_;
  VerdictOptions opt_;
  DhOprfSender oprf_;
  ElGamalKeyPair payload_;
  WrapPool wraps_;
  std::vector<Bytes> pre_outputs_;
  std::vector<SealedPayload> own_sealed_;
  std::size_t output_bytes_ = kPrfOutputBytes;
  std::vector<std::size_t> candidate_item_;
};

/// Both parties in-process. Table seed is drawn from the CSPRNG when
/// params.seed is zero.
PsiOutcome v4_run(const std::vector<HashedRecord>& owner, const std::vector<HashedRecord>& reference,
                  const Group& g, CuckooParams params = {}, const VerdictOptions& opt = {});

}  // namespace gazecheck
