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

#include "gazecheck/error.hpp"

namespace gazecheck {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BadCodeDim: return "BadCodeDim";
    case ErrorCode::NonFiniteAngle: return "NonFiniteAngle";
    case ErrorCode::ZeroDim: return "ZeroDim";
    case ErrorCode::ZeroBits: return "ZeroBits";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::MissingCode: return "MissingCode";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EntropyFailure: return "EntropyFailure";
    case ErrorCode::InvalidElement: return "InvalidElement";
    case ErrorCode::DuplicateDigest: return "DuplicateDigest";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::StashOverflow: return "StashOverflow";
    case ErrorCode::TranscriptMalformed: return "TranscriptMalformed";
    case ErrorCode::OprfFailure: return "OprfFailure";
    case ErrorCode::LabelTooWide: return "LabelTooWide";
    case ErrorCode::IntegrityFailure: return "IntegrityFailure";
    case ErrorCode::RevealDisabled: return "RevealDisabled";
    case ErrorCode::BasisMismatch: return "BasisMismatch";
    case ErrorCode::MaskSizeMismatch: return "MaskSizeMismatch";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::ParamRejected: return "ParamRejected";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::AbortReceived: return "AbortReceived";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OutOfMemory: return "OutOfMemory";
  }
  return "Unknown";
}

namespace {
std::string format_message(ErrorCode code, const std::string& detail) {
  std::string msg(to_string(code));
  if (!detail.empty()) {
    msg += "(" + detail + ")";
  }
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, std::string detail)
    : std::runtime_error(format_message(code, detail)),
      code_(code),
      detail_(std::move(detail)) {}

void fail(ErrorCode code, std::string detail) {
  throw Error(code, std::move(detail));
}

}  // namespace gazecheck
