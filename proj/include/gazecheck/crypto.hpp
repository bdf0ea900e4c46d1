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

#include <array>
#include <cstdint>

#include "gazecheck/bytes.hpp"

namespace gazecheck {

using Hash256 = std::array<std::uint8_t, 32>;

Hash256 sha256(ByteView data);
/// SHA-256 over the concatenation of `parts`.
Hash256 sha256(std::initializer_list<ByteView> parts);

Hash256 hmac_sha256(ByteView key, std::initializer_list<ByteView> parts);

/// CSPRNG bytes; throws EntropyFailure if the generator cannot be seeded.
void random_bytes(std::span<std::uint8_t> out);
Bytes random_bytes(std::size_t n);
/// Uniform in [0, n) from the CSPRNG.
std::uint64_t random_below(std::uint64_t n);

/// Fisher-Yates with CSPRNG indices.
template <typename T>
void secure_shuffle(std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[random_below(i)]);
  }
}

/// Overwrites the buffer in a way the optimizer may not elide.
void secure_zero(std::span<std::uint8_t> buf);

inline ByteView view(const Hash256& h) { return {h.data(), h.size()}; }

}  // namespace gazecheck
