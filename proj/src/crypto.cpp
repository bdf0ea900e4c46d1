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

#include "gazecheck/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <memory>

namespace gazecheck {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

}  // namespace

Hash256 sha256(ByteView data) { return sha256({data}); }

Hash256 sha256(std::initializer_list<ByteView> parts) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::InvalidArgument, "sha256 init");
  }
  for (auto p : parts) EVP_DigestUpdate(ctx.get(), p.data(), p.size());
  Hash256 out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), out.data(), &len);
  return out;
}

Hash256 hmac_sha256(ByteView key, std::initializer_list<ByteView> parts) {
  // One-shot HMAC over a contiguous buffer; the inputs here are short.
  Bytes msg;
  for (auto p : parts) msg.insert(msg.end(), p.begin(), p.end());
  Hash256 out{};
  unsigned int len = 0;
  static const std::uint8_t kEmpty = 0;
  if (!HMAC(EVP_sha256(), key.empty() ? &kEmpty : key.data(), static_cast<int>(key.size()),
            msg.data(), msg.size(), out.data(), &len)) {
    fail(ErrorCode::InvalidArgument, "hmac");
  }
  return out;
}

void random_bytes(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    fail(ErrorCode::EntropyFailure, "RAND_bytes");
  }
}

Bytes random_bytes(std::size_t n) {
  Bytes b(n);
  random_bytes(b);
  return b;
}

std::uint64_t random_below(std::uint64_t n) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "random_below(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    std::array<std::uint8_t, 8> buf{};
    random_bytes(buf);
    v = 0;
    for (auto b : buf) v = (v << 8) | b;
  } while (v >= limit);
  return v % n;
}

void secure_zero(std::span<std::uint8_t> buf) {
  if (!buf.empty()) OPENSSL_cleanse(buf.data(), buf.size());
}

}  // namespace gazecheck
