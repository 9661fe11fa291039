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

#ifndef MBL_EMBEDDINGS_HPP_
#define MBL_EMBEDDINGS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mbl/corpus.hpp"

namespace mbl {

// One unit-length row per token, all rows the same dimension.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  // Rows are normalized on construction. Throws kEmptyEmbedding for no rows or
  // an all-zero row, kDimensionMismatch for ragged rows or a token/row count
  // disagreement.
  static EmbeddingMatrix from_rows(std::vector<std::string> tokens,
                                   const std::vector<std::vector<double>>& rows);
  static EmbeddingMatrix from_flat(std::vector<std::string> tokens,
                                   std::vector<double> values, std::size_t dim);

  std::size_t rows() const noexcept { return tokens_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
};

class SentenceEmbedding {
 public:
  SentenceEmbedding() = default;
  // Normalizes `v`; throws kEmptyEmbedding for an empty or zero vector.
  static SentenceEmbedding from_vector(std::vector<double> v);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

// Mean of the token rows, re-normalized.
SentenceEmbedding mean_pool(const EmbeddingMatrix& m);

// Dot product of two unit vectors. Throws kDimensionMismatch.
double cosine(const SentenceEmbedding& a, const SentenceEmbedding& b);

// Source of token embeddings. `sentence_id`, when given, lets stores of
// precomputed contextual matrices find the right sentence; conventional ids
// are "<instance>#src" and "<instance>#ref<i>".
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual EmbeddingMatrix embed_tokens(const Sentence& sentence,
                                       std::string_view sentence_id = {}) const = 0;
  virtual SentenceEmbedding embed_sentence(const Sentence& sentence,
                                           std::string_view sentence_id = {}) const;
  // Stable description recorded in run manifests.
  virtual std::string describe() const = 0;
};

// Deterministic pseudo-embeddings: each token's bytes are hashed (FNV-1a) and
// mixed with the global seed, then a splitmix64 stream fills the row with
// values in [-1, 1) before normalization. Integer-only up to the final
// scaling, so rows are identical on every platform.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 32;

  explicit HashEmbeddingProvider(std::size_t dim = kDefaultDim,
                                 std::uint64_t seed = 0);

  std::vector<double> token_vector(std::string_view token) const;
  EmbeddingMatrix embed_tokens(const Sentence& sentence,
                               std::string_view sentence_id = {}) const override;
  std::string describe() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Precomputed embeddings from JSONL. Lines are either per-sentence matrices
// {"id", "tokens", "vectors"} or per-token vectors {"token", "vector"}.
// Lookup order: sentence id, then exact token sequence, then token by token.
// Strict mode throws kTokenNotFound for an unknown token; lenient mode falls
// back to hash embeddings of the store's dimension.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  static FileEmbeddingProvider load(const std::filesystem::path& file,
                                    bool strict = true);

  EmbeddingMatrix embed_tokens(const Sentence& sentence,
                               std::string_view sentence_id = {}) const override;
  std::string describe() const override;

  std::size_t dim() const noexcept { return dim_; }

 private:
  std::string path_;
  bool strict_ = true;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, EmbeddingMatrix> by_id_;
  std::unordered_map<std::string, EmbeddingMatrix> by_tokens_;
  std::unordered_map<std::string, std::vector<double>> by_token_;
};

// POST {base_url}/embed with {"tokens": [...]}, expects {"vectors": [[...]]}.
// Responses are cached per token sequence; the cache is mutex-guarded.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(std::string base_url, int timeout_seconds = 30);

  EmbeddingMatrix embed_tokens(const Sentence& sentence,
                               std::string_view sentence_id = {}) const override;
  std::string describe() const override;

 private:
  std::string base_url_;
  int timeout_seconds_;
  mutable std::mutex mu_;
  mutable std::size_t dim_ = 0;
  mutable std::unordered_map<std::string, EmbeddingMatrix> cache_;
};

// "test", "test:<dim>", "test:<dim>:<seed>", "file:<path>",
// "file-lenient:<path>", "http:<url>". Throws kInvalidArgument.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view spec);

}  // namespace mbl

#endif  // MBL_EMBEDDINGS_HPP_
