// Copyright 2026 The MBL Authors.
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

#ifndef MBL_ERROR_HPP_
#define MBL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace mbl {

// Every failure the library reports carries one of these codes. The CLI maps
// the code's category onto its exit status.
enum class ErrorCode {
  // corpus
  kMissingFile,
  kLineCountMismatch,
  kEmptyLine,
  kParseError,
  kDuplicateId,
  kEmptyReferences,
  // metrics
  kEmptySentence,
  kEmptyEmbedding,
  kDimensionMismatch,
  kNoReferences,
  kLengthMismatch,
  kEmptyCorpus,
  kInvalidArgument,
  // embeddings
  kTokenNotFound,
  // selection
  kSariNeedsMultipleReferences,
  kEmbeddingBackendMissing,
  // prompting
  kTemplateSlotMissing,
  kEmptyCompletion,
  // llm
  kBackendUnavailable,
  kAuthError,
  kRateLimited,
  kCacheCorrupt,
};

enum class ErrorCategory { kUsage, kData, kBackend };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return error_category(code_); }

 private:
  ErrorCode code_;
};

}  // namespace mbl

#endif  // MBL_ERROR_HPP_
