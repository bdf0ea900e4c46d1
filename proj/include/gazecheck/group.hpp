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
#include <memory>
#include <string>
#include <string_view>

#include "gazecheck/bytes.hpp"

namespace gazecheck {

enum class GroupId : std::uint8_t {
  P256 = 1,      // NIST P-256, uncompressed 65-byte points
  Modp3072 = 2,  // quadratic residues modulo the RFC 3526 3072-bit safe prime
};

std::string to_string(GroupId id);
GroupId parse_group_id(std::string_view s);
GroupId group_id_from_byte(std::uint8_t b);

/// Prime-order cyclic group written multiplicatively. Elements and scalars
/// travel as canonical fixed-width big-endian byte strings; every operation
/// validates its element inputs and throws InvalidElement on bad encodings.
class Group {
 public:
  virtual ~Group() = default;

  virtual GroupId id() const = 0;
  virtual std::size_t element_size() const = 0;
  virtual std::size_t scalar_size() const = 0;

  virtual Bytes generator() const = 0;
  /// Deterministic map from arbitrary bytes into the group (never the identity).
  virtual Bytes hash_to_group(ByteView data) const = 0;
  virtual Bytes exp(ByteView elem, ByteView scalar) const = 0;
  virtual Bytes exp_base(ByteView scalar) const = 0;
  virtual Bytes mul(ByteView a, ByteView b) const = 0;
  /// a * b^-1
  virtual Bytes div(ByteView a, ByteView b) const = 0;
  virtual void validate(ByteView elem) const = 0;

  /// Uniform in [1, q-1].
  virtual Bytes random_scalar() const = 0;
  virtual Bytes scalar_inverse(ByteView k) const = 0;
  /// 1 <= k <= q-1
  virtual bool scalar_in_range(ByteView k) const = 0;
};

/// Process-wide immutable instances.
const Group& group_for(GroupId id);

/// Secret exponent. Move-only; the buffer is wiped on destruction.
class PrivateKey {
 public:
  PrivateKey() = default;
  explicit PrivateKey(Bytes scalar) : k_(std::move(scalar)) {}
  PrivateKey(const PrivateKey&) = delete;
  PrivateKey& operator=(const PrivateKey&) = delete;
  PrivateKey(PrivateKey&& o) noexcept : k_(std::move(o.k_)) { o.k_.clear(); }
  PrivateKey& operator=(PrivateKey&& o) noexcept;
  ~PrivateKey();

  ByteView scalar() const { return k_; }
  bool empty() const { return k_.empty(); }

 private:
  Bytes k_;
};

PrivateKey keygen(const Group& g);

}  // namespace gazecheck
