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

#include "gazecheck/group.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/err.h>
#include <openssl/obj_mac.h>

#include "gazecheck/crypto.hpp"

namespace gazecheck {

namespace {

struct BnDeleter {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
using Bn = std::unique_ptr<BIGNUM, BnDeleter>;

struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); }
};
using Point = std::unique_ptr<EC_POINT, PointDeleter>;

struct CtxDeleter {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};

BN_CTX* ctx() {
  thread_local std::unique_ptr<BN_CTX, CtxDeleter> c(BN_CTX_new());
  return c.get();
}

Bn bn() {
  Bn b(BN_new());
  if (!b) fail(ErrorCode::InvalidArgument, "BN_new");
  return b;
}

Bn bn_from(ByteView be) {
  Bn b(BN_bin2bn(be.data(), static_cast<int>(be.size()), nullptr));
  if (!b) fail(ErrorCode::InvalidArgument, "BN_bin2bn");
  return b;
}

Bytes bn_to(const BIGNUM* b, std::size_t width) {
  Bytes out(width);
  if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0) {
    fail(ErrorCode::InvalidArgument, "scalar wider than field");
  }
  return out;
}

Bytes random_in_range(const BIGNUM* q, std::size_t width) {
  Bn k = bn();
  do {
    if (BN_priv_rand_range(k.get(), q) != 1) fail(ErrorCode::EntropyFailure, "BN_priv_rand_range");
  } while (BN_is_zero(k.get()));
  return bn_to(k.get(), width);
}

constexpr std::string_view kHashDomain = "gazecheck/h2g/v1";

class P256Group final : public Group {
 public:
  P256Group() : g_(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1)) {
    if (!g_) fail(ErrorCode::InvalidArgument, "P-256 unavailable");
    q_ = bn();
    p_ = bn();
    EC_GROUP_get_order(g_, q_.get(), ctx());
    EC_GROUP_get_curve(g_, p_.get(), nullptr, nullptr, ctx());
  }
  ~P256Group() override { EC_GROUP_free(g_); }

  GroupId id() const override { return GroupId::P256; }
  std::size_t element_size() const override { return 65; }
  std::size_t scalar_size() const override { return 32; }

  Bytes generator() const override { return encode(EC_GROUP_get0_generator(g_)); }

  Bytes hash_to_group(ByteView data) const override {
    // Try-and-increment on the x coordinate; half of all candidates succeed.
    Point pt = point();
    Bn x = bn();
    for (std::uint32_t ctr = 0; ctr < 256; ++ctr) {
      const std::uint8_t c[4] = {std::uint8_t(ctr >> 24), std::uint8_t(ctr >> 16),
                                 std::uint8_t(ctr >> 8), std::uint8_t(ctr)};
      Hash256 h = sha256({as_bytes(kHashDomain), ByteView(c, 4), data});
      BN_bin2bn(h.data(), 32, x.get());
      if (BN_cmp(x.get(), p_.get()) >= 0) continue;
      const int y_bit = sha256({view(h)})[0] & 1;
      if (EC_POINT_set_compressed_coordinates(g_, pt.get(), x.get(), y_bit, ctx()) == 1) {
        return encode(pt.get());
      }
      ERR_clear_error();
    }
    fail(ErrorCode::InvalidArgument, "hash_to_group exhausted");
  }

  Bytes exp(ByteView elem, ByteView scalar) const override {
    Point a = decode(elem);
    Bn k = bn_from(scalar);
    Point r = point();
    if (EC_POINT_mul(g_, r.get(), nullptr, a.get(), k.get(), ctx()) != 1) {
      fail(ErrorCode::InvalidElement, "EC_POINT_mul");
    }
    return encode(r.get());
  }

  Bytes exp_base(ByteView scalar) const override {
    Bn k = bn_from(scalar);
    Point r = point();
    if (EC_POINT_mul(g_, r.get(), k.get(), nullptr, nullptr, ctx()) != 1) {
      fail(ErrorCode::InvalidElement, "EC_POINT_mul");
    }
    return encode(r.get());
  }

  Bytes mul(ByteView a, ByteView b) const override {
    Point pa = decode(a), pb = decode(b), r = point();
    EC_POINT_add(g_, r.get(), pa.get(), pb.get(), ctx());
    return encode(r.get());
  }

  Bytes div(ByteView a, ByteView b) const override {
    Point pa = decode(a), pb = decode(b), r = point();
    EC_POINT_invert(g_, pb.get(), ctx());
    EC_POINT_add(g_, r.get(), pa.get(), pb.get(), ctx());
    return encode(r.get());
  }

  void validate(ByteView elem) const override { decode(elem); }

  Bytes random_scalar() const override { return random_in_range(q_.get(), 32); }

  Bytes scalar_inverse(ByteView k) const override {
    Bn a = bn_from(k), r = bn();
    if (!BN_mod_inverse(r.get(), a.get(), q_.get(), ctx())) {
      fail(ErrorCode::InvalidArgument, "scalar not invertible");
    }
    return bn_to(r.get(), 32);
  }

  bool scalar_in_range(ByteView k) const override {
    Bn a = bn_from(k);
    return !BN_is_zero(a.get()) && BN_cmp(a.get(), q_.get()) < 0;
  }

 private:
  Point point() const {
    Point p(EC_POINT_new(g_));
    if (!p) fail(ErrorCode::InvalidArgument, "EC_POINT_new");
    return p;
  }

  Point decode(ByteView elem) const {
    // Uncompressed form only; the identity has no 65-byte encoding and the
    // cofactor is 1, so an on-curve point is a subgroup member.
    if (elem.size() != 65 || elem[0] != 0x04) fail(ErrorCode::InvalidElement, "encoding");
    Point p = point();
    if (EC_POINT_oct2point(g_, p.get(), elem.data(), elem.size(), ctx()) != 1) {
      ERR_clear_error();
      fail(ErrorCode::InvalidElement, "not on curve");
    }
    return p;
  }

  Bytes encode(const EC_POINT* p) const {
    if (EC_POINT_is_at_infinity(g_, p)) fail(ErrorCode::InvalidElement, "identity");
    Bytes out(65);
    if (EC_POINT_point2oct(g_, p, POINT_CONVERSION_UNCOMPRESSED, out.data(), out.size(), ctx()) !=
        65) {
      fail(ErrorCode::InvalidElement, "point2oct");
    }
    return out;
  }

  EC_GROUP* g_;
  Bn q_, p_;
};

// RFC 3526, 3072-bit MODP group.
constexpr const char* kModp3072 =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AAAC42DAD33170D04507A33"
    "A85521ABDF1CBA64ECFB850458DBEF0A8AEA71575D060C7DB3970F85A6E1E4C7"
    "ABF5AE8CDB0933D71E8C94E04A25619DCEE3D2261AD2EE6BF12FFA06D98A0864"
    "D87602733EC86A64521F2B18177B200CBBE117577A615D6C770988C0BAD946E2"
    "08E24FA074E5AB3143DB5BFCE0FD108E4B82D120A93AD2CAFFFFFFFFFFFFFFFF";

class ModpGroup final : public Group {
 public:
  ModpGroup() {
    BIGNUM* p = nullptr;
    BN_hex2bn(&p, kModp3072);
    p_ = Bn(p);
    q_ = bn();
    BN_rshift1(q_.get(), p_.get());
    g_ = bn();
    BN_set_word(g_.get(), 4);
    mont_ = BN_MONT_CTX_new();
    BN_MONT_CTX_set(mont_, p_.get(), ctx());
  }
  ~ModpGroup() override { BN_MONT_CTX_free(mont_); }

  GroupId id() const override { return GroupId::Modp3072; }
  std::size_t element_size() const override { return 384; }
  std::size_t scalar_size() const override { return 384; }

  Bytes generator() const override { return bn_to(g_.get(), 384); }

  Bytes hash_to_group(ByteView data) const override {
    // Expand to 400 bytes (128 bits of slack for near-uniform reduction),
    // reduce mod p and square into the order-q subgroup.
    for (std::uint8_t ctr = 0;; ++ctr) {
      Bytes wide;
      for (std::uint8_t blk = 0; wide.size() < 400; ++blk) {
        const std::uint8_t tag[2] = {ctr, blk};
        Hash256 h = sha256({as_bytes(kHashDomain), ByteView(tag, 2), data});
        wide.insert(wide.end(), h.begin(), h.end());
      }
      wide.resize(400);
      Bn x = bn_from(wide), r = bn();
      BN_mod(x.get(), x.get(), p_.get(), ctx());
      BN_mod_sqr(r.get(), x.get(), p_.get(), ctx());
      if (!BN_is_zero(r.get()) && !BN_is_one(r.get())) return bn_to(r.get(), 384);
    }
  }

  Bytes exp(ByteView elem, ByteView scalar) const override {
    Bn a = decode(elem), k = bn_from(scalar), r = bn();
    BN_mod_exp_mont(r.get(), a.get(), k.get(), p_.get(), ctx(), mont_);
    return encode(r.get());
  }

  Bytes exp_base(ByteView scalar) const override { return exp(generator(), scalar); }

  Bytes mul(ByteView a, ByteView b) const override {
    Bn x = decode(a), y = decode(b), r = bn();
    BN_mod_mul(r.get(), x.get(), y.get(), p_.get(), ctx());
    return encode(r.get());
  }

  Bytes div(ByteView a, ByteView b) const override {
    Bn x = decode(a), y = decode(b), inv = bn(), r = bn();
    BN_mod_inverse(inv.get(), y.get(), p_.get(), ctx());
    BN_mod_mul(r.get(), x.get(), inv.get(), p_.get(), ctx());
    return encode(r.get());
  }

  void validate(ByteView elem) const override { decode(elem); }

  Bytes random_scalar() const override { return random_in_range(q_.get(), 384); }

  Bytes scalar_inverse(ByteView k) const override {
    Bn a = bn_from(k), r = bn();
    if (!BN_mod_inverse(r.get(), a.get(), q_.get(), ctx())) {
      fail(ErrorCode::InvalidArgument, "scalar not invertible");
    }
    return bn_to(r.get(), 384);
  }

  bool scalar_in_range(ByteView k) const override {
    Bn a = bn_from(k);
    return !BN_is_zero(a.get()) && BN_cmp(a.get(), q_.get()) < 0;
  }

 private:
  Bn decode(ByteView elem) const {
    if (elem.size() != 384) fail(ErrorCode::InvalidElement, "encoding");
    Bn x = bn_from(elem);
    if (BN_is_zero(x.get()) || BN_is_one(x.get()) || BN_cmp(x.get(), p_.get()) >= 0) {
      fail(ErrorCode::InvalidElement, "out of range");
    }
    // For a safe prime the order-q subgroup is exactly the quadratic residues.
    if (BN_kronecker(x.get(), p_.get(), ctx()) != 1) fail(ErrorCode::InvalidElement, "non-residue");
    return x;
  }

  Bytes encode(const BIGNUM* x) const {
    if (BN_is_one(x)) fail(ErrorCode::InvalidElement, "identity");
    return bn_to(x, 384);
  }

  Bn p_, q_, g_;
  BN_MONT_CTX* mont_ = nullptr;
};

}  // namespace

std::string to_string(GroupId id) {
  switch (id) {
    case GroupId::P256: return "p256";
    case GroupId::Modp3072: return "modp3072";
  }
  return "p256";
}

GroupId parse_group_id(std::string_view s) {
  if (s == "p256") return GroupId::P256;
  if (s == "modp3072") return GroupId::Modp3072;
  fail(ErrorCode::InvalidArgument, "group " + std::string(s));
}

GroupId group_id_from_byte(std::uint8_t b) {
  if (b == 1) return GroupId::P256;
  if (b == 2) return GroupId::Modp3072;
  fail(ErrorCode::TranscriptMalformed, "group id " + std::to_string(b));
}

const Group& group_for(GroupId id) {
  static const P256Group p256;
  static const ModpGroup modp;
  return id == GroupId::P256 ? static_cast<const Group&>(p256) : modp;
}

PrivateKey& PrivateKey::operator=(PrivateKey&& o) noexcept {
  if (this != &o) {
    secure_zero(k_);
    k_ = std::move(o.k_);
    o.k_.clear();
  }
  return *this;
}

PrivateKey::~PrivateKey() { secure_zero(k_); }

PrivateKey keygen(const Group& g) { return PrivateKey(g.random_scalar()); }

}  // namespace gazecheck
