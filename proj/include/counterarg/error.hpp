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

#ifndef COUNTERARG_ERROR_HPP_
#define COUNTERARG_ERROR_HPP_

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace counterarg {

// Every failure raised by the library carries one of these codes. Callers
// switch on code() rather than on the message text.
enum class Errc {
  kInvalidArgument,
  kMissingFile,
  kMalformedRecord,
  kUnknownLabel,
  kEmptyDataset,
  kInsufficientPool,
  kUnknownTemplate,
  kMissingExamples,
  kProviderUnavailable,
  kRateLimited,
  kEmptyCompletion,
  kAuthMissing,
  kEmptyText,
  kEmptyGeneration,
  kLengthMismatch,
  kReferenceTooShort,
  kEmptyCandidate,
  kEmptyReference,
  kUnparseableVerdict,
  kMixedItems,
  kBinningUnsupported,
  kMissingGeneration,
  kNotFound,
  kSessionClosed,
  kExhausted,
  kUnknownNonce,
  kAlreadyVoted,
  kIncompleteStudy,
  kVariantMisconfigured,
  kIoFailure,
  kConfigInvalid,
  kStageFailed,
};

std::string_view ErrcName(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

  // 1-based line of the offending record, for file-ingestion errors.
  std::optional<std::size_t> line() const noexcept { return line_; }
  Error& with_line(std::size_t line) {
    line_ = line;
    return *this;
  }

  // Server-suggested wait, for kRateLimited.
  std::optional<std::chrono::milliseconds> retry_after() const noexcept {
    return retry_after_;
  }
  Error& with_retry_after(std::chrono::milliseconds wait) {
    retry_after_ = wait;
    return *this;
  }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
  std::optional<std::chrono::milliseconds> retry_after_;
};

}  // namespace counterarg

#endif  // COUNTERARG_ERROR_HPP_
