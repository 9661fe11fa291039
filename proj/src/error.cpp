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

#include "mbl/error.hpp"

namespace mbl {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kLineCountMismatch: return "LineCountMismatch";
    case ErrorCode::kEmptyLine: return "EmptyLine";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyReferences: return "EmptyReferences";
    case ErrorCode::kEmptySentence: return "EmptySentence";
    case ErrorCode::kEmptyEmbedding: return "EmptyEmbedding";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoReferences: return "NoReferences";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTokenNotFound: return "TokenNotFound";
    case ErrorCode::kSariNeedsMultipleReferences: return "SariNeedsMultipleReferences";
    case ErrorCode::kEmbeddingBackendMissing: return "EmbeddingBackendMissing";
    case ErrorCode::kTemplateSlotMissing: return "TemplateSlotMissing";
    case ErrorCode::kEmptyCompletion: return "EmptyCompletion";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmbeddingBackendMissing:
      return ErrorCategory::kUsage;
    case ErrorCode::kBackendUnavailable:
    case ErrorCode::kAuthError:
    case ErrorCode::kRateLimited:
      return ErrorCategory::kBackend;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace mbl
