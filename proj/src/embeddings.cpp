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

#include "mbl/embeddings.hpp"

#include <cmath>
#include <fstream>

#include "httplib.h"
#include "json.hpp"
#include "mbl/error.hpp"
#include "mbl/kernels.hpp"

namespace mbl {
namespace {

using nlohmann::json;

// Throws when the vector cannot be scaled to unit length.
void normalize_in_place(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 0.0) || !std::isfinite(sq)) {
    throw Error(ErrorCode::kEmptyEmbedding, "zero or non-finite vector");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string key;
  for (const auto& t : tokens) {
    if (!key.empty()) key += ' ';
    key += t;
  }
  return key;
}

std::vector<std::vector<double>> parse_rows(const json& rows) {
  return rows.get<std::vector<std::vector<double>>>();
}

}  // namespace

EmbeddingMatrix EmbeddingMatrix::from_rows(
    std::vector<std::string> tokens,
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyEmbedding, "no rows");
  const std::size_t dim = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "row of size " + std::to_string(r.size()) + ", expected " +
                      std::to_string(dim));
    }
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return from_flat(std::move(tokens), std::move(flat), dim);
}

EmbeddingMatrix EmbeddingMatrix::from_flat(std::vector<std::string> tokens,
                                           std::vector<double> values,
                                           std::size_t dim) {
  if (tokens.empty() || values.empty() || dim == 0) {
    throw Error(ErrorCode::kEmptyEmbedding, "no rows");
  }
  if (values.size() != tokens.size() * dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(tokens.size()) + " tokens but " +
                    std::to_string(values.size()) + " values at dim " +
                    std::to_string(dim));
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    normalize_in_place(std::span<double>(values.data() + i * dim, dim));
  }
  EmbeddingMatrix m;
  m.tokens_ = std::move(tokens);
  m.values_ = std::move(values);
  m.dim_ = dim;
  return m;
}

SentenceEmbedding SentenceEmbedding::from_vector(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::kEmptyEmbedding, "empty vector");
  normalize_in_place(v);
  SentenceEmbedding e;
  e.values_ = std::move(v);
  return e;
}

SentenceEmbedding mean_pool(const EmbeddingMatrix& m) {
  if (m.empty()) throw Error(ErrorCode::kEmptyEmbedding, "no rows");
  std::vector<double> acc(m.dim(), 0.0);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    k.accumulate(acc.data(), m.row(i).data(), m.dim());
  }
  // Scaling by 1/rows does not change the direction; normalization does it.
  return SentenceEmbedding::from_vector(std::move(acc));
}

double cosine(const SentenceEmbedding& a, const SentenceEmbedding& b) {
  return kernels::dot(a.values(), b.values());
}

SentenceEmbedding EmbeddingProvider::embed_sentence(
    const Sentence& sentence, std::string_view sentence_id) const {
  return mean_pool(embed_tokens(sentence, sentence_id));
}

// --- hash -------------------------------------------------------------------

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "dimension must be > 0");
}

std::vector<double> HashEmbeddingProvider::token_vector(std::string_view token) const {
  std::uint64_t mix = seed_;
  std::uint64_t state = fnv1a(token) ^ splitmix64(mix);
  std::vector<double> v(dim_);
  for (;;) {
    for (double& x : v) {
      const double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      x = 2.0 * unit - 1.0;
    }
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq > 0.0) break;
  }
  normalize_in_place(v);
  return v;
}

EmbeddingMatrix HashEmbeddingProvider::embed_tokens(const Sentence& sentence,
                                                    std::string_view) const {
  if (sentence.tokens().empty()) {
    throw Error(ErrorCode::kEmptyEmbedding, "sentence has no tokens");
  }
  std::vector<double> flat;
  flat.reserve(sentence.tokens().size() * dim_);
  for (const auto& t : sentence.tokens()) {
    const auto v = token_vector(t);
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix::from_flat(sentence.tokens(), std::move(flat), dim_);
}

std::string HashEmbeddingProvider::describe() const {
  return "test:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

// --- file -------------------------------------------------------------------

FileEmbeddingProvider FileEmbeddingProvider::load(const std::filesystem::path& file,
                                                  bool strict) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, file.string());
  FileEmbeddingProvider p;
  p.path_ = file.string();
  p.strict_ = strict;
  const auto check_dim = [&p](std::size_t dim, std::size_t lineno) {
    if (p.dim_ == 0) p.dim_ = dim;
    if (dim != p.dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "line " + std::to_string(lineno) + ": dimension " +
                      std::to_string(dim) + ", store uses " +
                      std::to_string(p.dim_));
    }
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      if (obj.contains("token")) {
        auto v = obj.at("vector").get<std::vector<double>>();
        check_dim(v.size(), lineno);
        normalize_in_place(v);
        p.by_token_[obj.at("token").get<std::string>()] = std::move(v);
      } else {
        auto tokens = obj.at("tokens").get<std::vector<std::string>>();
        const std::string key = join_tokens(tokens);
        auto m = EmbeddingMatrix::from_rows(std::move(tokens),
                                            parse_rows(obj.at("vectors")));
        check_dim(m.dim(), lineno);
        if (obj.contains("id")) p.by_id_[obj.at("id").get<std::string>()] = m;
        p.by_tokens_.emplace(key, std::move(m));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  p.path_ + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (p.dim_ == 0) throw Error(ErrorCode::kEmptyEmbedding, "empty store " + p.path_);
  return p;
}

EmbeddingMatrix FileEmbeddingProvider::embed_tokens(const Sentence& sentence,
                                                    std::string_view sentence_id) const {
  const auto& tokens = sentence.tokens();
  if (tokens.empty()) throw Error(ErrorCode::kEmptyEmbedding, "sentence has no tokens");
  if (!sentence_id.empty()) {
    const auto it = by_id_.find(std::string(sentence_id));
    if (it != by_id_.end()) {
      if (it->second.rows() != tokens.size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "stored matrix for '" + std::string(sentence_id) + "' has " +
                        std::to_string(it->second.rows()) + " rows, sentence has " +
                        std::to_string(tokens.size()) + " tokens");
      }
      return it->second;
    }
  }
  if (const auto it = by_tokens_.find(join_tokens(tokens)); it != by_tokens_.end()) {
    return it->second;
  }
  std::vector<double> flat;
  flat.reserve(tokens.size() * dim_);
  const HashEmbeddingProvider fallback(dim_);
  for (const auto& t : tokens) {
    const auto it = by_token_.find(t);
    if (it != by_token_.end()) {
      flat.insert(flat.end(), it->second.begin(), it->second.end());
    } else if (strict_) {
      throw Error(ErrorCode::kTokenNotFound, "'" + t + "' not in " + path_);
    } else {
      const auto v = fallback.token_vector(t);
      flat.insert(flat.end(), v.begin(), v.end());
    }
  }
  return EmbeddingMatrix::from_flat(tokens, std::move(flat), dim_);
}

std::string FileEmbeddingProvider::describe() const {
  return (strict_ ? "file:" : "file-lenient:") + path_;
}

// --- http -------------------------------------------------------------------

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url,
                                             int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

EmbeddingMatrix HttpEmbeddingProvider::embed_tokens(const Sentence& sentence,
                                                    std::string_view) const {
  const auto& tokens = sentence.tokens();
  if (tokens.empty()) throw Error(ErrorCode::kEmptyEmbedding, "sentence has no tokens");
  const std::string key = join_tokens(tokens);
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  const json body = {{"tokens", tokens}};
  const auto res = client.Post("/embed", body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kBackendUnavailable,
                base_url_ + "/embed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kBackendUnavailable,
                base_url_ + "/embed: HTTP " + std::to_string(res->status));
  }
  EmbeddingMatrix m;
  try {
    m = EmbeddingMatrix::from_rows(tokens, parse_rows(json::parse(res->body).at("vectors")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBackendUnavailable,
                base_url_ + "/embed: malformed response: " + e.what());
  }

  std::lock_guard<std::mutex> lock(mu_);
  if (dim_ == 0) dim_ = m.dim();
  if (m.dim() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "server returned dimension " + std::to_string(m.dim()) +
                    " after " + std::to_string(dim_));
  }
  cache_.emplace(key, m);
  return m;
}

std::string HttpEmbeddingProvider::describe() const { return "http:" + base_url_; }

std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string kind(spec.substr(0, colon));
  const std::string rest = colon == std::string_view::npos
                               ? std::string()
                               : std::string(spec.substr(colon + 1));
  if (kind == "test") {
    std::size_t dim = HashEmbeddingProvider::kDefaultDim;
    std::uint64_t seed = 0;
    if (!rest.empty()) {
      try {
        const auto second = rest.find(':');
        dim = std::stoul(rest.substr(0, second));
        if (second != std::string::npos) seed = std::stoull(rest.substr(second + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "bad test embedding spec '" +
                                                     std::string(spec) + "'");
      }
    }
    return std::make_unique<HashEmbeddingProvider>(dim, seed);
  }
  if ((kind == "file" || kind == "file-lenient") && !rest.empty()) {
    return std::make_unique<FileEmbeddingProvider>(
        FileEmbeddingProvider::load(rest, kind == "file"));
  }
  if (kind == "http" && !rest.empty()) {
    return std::make_unique<HttpEmbeddingProvider>(rest);
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown embeddings spec '" + std::string(spec) + "'");
}

}  // namespace mbl
