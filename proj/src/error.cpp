// Copyright 2026 The Counterarg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "counterarg/error.hpp"

namespace counterarg {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kMissingFile: return "MissingFile";
    case Errc::kMalformedRecord: return "MalformedRecord";
    case Errc::kUnknownLabel: return "UnknownLabel";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kInsufficientPool: return "InsufficientPool";
    case Errc::kUnknownTemplate: return "UnknownTemplate";
    case Errc::kMissingExamples: return "MissingExamples";
    case Errc::kProviderUnavailable: return "ProviderUnavailable";
    case Errc::kRateLimited: return "RateLimited";
    case Errc::kEmptyCompletion: return "EmptyCompletion";
    case Errc::kAuthMissing: return "AuthMissing";
    case Errc::kEmptyText: return "EmptyText";
    case Errc::kEmptyGeneration: return "EmptyGeneration";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kReferenceTooShort: return "ReferenceTooShort";
    case Errc::kEmptyCandidate: return "EmptyCandidate";
    case Errc::kEmptyReference: return "EmptyReference";
    case Errc::kUnparseableVerdict: return "UnparseableVerdict";
    case Errc::kMixedItems: return "MixedItems";
    case Errc::kBinningUnsupported: return "BinningUnsupported";
    case Errc::kMissingGeneration: return "MissingGeneration";
    case Errc::kNotFound: return "NotFound";
    case Errc::kSessionClosed: return "SessionClosed";
    case Errc::kExhausted: return "Exhausted";
    case Errc::kUnknownNonce: return "UnknownNonce";
    case Errc::kAlreadyVoted: return "AlreadyVoted";
    case Errc::kIncompleteStudy: return "IncompleteStudy";
    case Errc::kVariantMisconfigured: return "VariantMisconfigured";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kConfigInvalid: return "ConfigInvalid";
    case Errc::kStageFailed: return "StageFailed";
  }
  return "Unknown";
}

}  // namespace counterarg
