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

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazecheck {

enum class ErrorCode {
  // model
  DuplicateId,
  BadCodeDim,
  NonFiniteAngle,
  // encode
  ZeroDim,
  ZeroBits,
  DimMismatch,
  ZeroVector,
  MissingCode,
  Unreachable,
  InvalidArgument,
  // crypto / psi
  EntropyFailure,
  InvalidElement,
  DuplicateDigest,
  EmptyReference,
  ModeMismatch,
  VersionMismatch,
  StashOverflow,
  TranscriptMalformed,
  OprfFailure,
  // payload
  LabelTooWide,
  IntegrityFailure,
  RevealDisabled,
  // verify
  BasisMismatch,
  MaskSizeMismatch,
  // session
  VersionUnsupported,
  ParamRejected,
  TransportError,
  AbortReceived,
  Timeout,
  ProtocolError,
  // io
  IoError,
  ParseError,
  OutOfMemory,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. `detail()` holds
/// the argument of the error (offending sample id, field name, stage label).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, std::string detail = {});

}  // namespace gazecheck
