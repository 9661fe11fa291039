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

#ifndef MBL_LLM_HPP_
#define MBL_LLM_HPP_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mbl/error.hpp"
#include "mbl/llm_params.hpp"
#include "mbl/prompting.hpp"

namespace mbl {

enum class BackendKind { kHttp, kMockEcho, kMockFirstReference };

std::string_view backend_name(BackendKind kind);
// "http", "mock-echo", "mock-first-reference".
BackendKind parse_backend(std::string_view name);

struct GenerationRecord {
  std::string digest;
  std::string prompt_text;
  std::string completion_text;
  std::string model_id;
  GenerationParams params;
  std::string timestamp;  // ISO-8601 UTC; not part of the digest
  BackendKind backend = BackendKind::kMockEcho;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

nlohmann::ordered_json to_json(const GenerationRecord& r);
GenerationRecord record_from_json(const nlohmann::json& j);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const Prompt& prompt, const GenerationParams& params) = 0;
  virtual BackendKind kind() const = 0;
};

// Returns the query sentence unchanged.
class MockEchoBackend final : public CompletionBackend {
 public:
  std::string complete(const Prompt& prompt, const GenerationParams& params) override;
  BackendKind kind() const override { return BackendKind::kMockEcho; }
};

// Returns the first reference of the query, looked up by its raw text.
// Unknown queries fail with kBackendUnavailable.
class MockFirstReferenceBackend final : public CompletionBackend {
 public:
  MockFirstReferenceBackend() = default;
  explicit MockFirstReferenceBackend(const Corpus& test);

  void add(std::string query, std::string reference);
  std::string complete(const Prompt& prompt, const GenerationParams& params) override;
  BackendKind kind() const override { return BackendKind::kMockFirstReference; }

 private:
  std::unordered_map<std::string, std::string> reference_by_query_;
};

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  // POST /v1/completions with "prompt" instead of the chat endpoint.
  bool legacy_completions = false;
  int timeout_seconds = 60;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};

  // OPENAI_API_KEY and OPENAI_BASE_URL.
  static HttpBackendConfig from_env();
};

// OpenAI-compatible client. Timeouts, HTTP 429 and 5xx are retried with
// exponential backoff; 401/403 raise kAuthError immediately.
class HttpCompletionBackend final : public CompletionBackend {
 public:
  explicit HttpCompletionBackend(HttpBackendConfig config);

  std::string complete(const Prompt& prompt, const GenerationParams& params) override;
  BackendKind kind() const override { return BackendKind::kHttp; }

  static nlohmann::json request_body(const Prompt& prompt, const GenerationParams& params,
                                     bool legacy_completions);

 private:
  HttpBackendConfig config_;
  std::string host_;   // scheme://host[:port]
  std::string prefix_; // path before /v1
};

// Append-only JSONL journal of GenerationRecords keyed by digest. Each line
// carries a SHA-256 "check" over the rest of the record. On open, a damaged
// run of lines at the end of the file (an interrupted write) is moved to
// "<path>.quarantine" and cut from the journal; damage followed by intact
// records raises kCacheCorrupt. One writer, any number of readers.
class ResponseCache {
 public:
  // In-memory only.
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path path);

  std::optional<GenerationRecord> find(const std::string& digest) const;
  void put(const GenerationRecord& record);

  std::size_t size() const;
  std::size_t quarantined_lines() const noexcept { return quarantined_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  static std::string encode_line(const GenerationRecord& record);

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, GenerationRecord> records_;
  std::ofstream out_;
  std::size_t quarantined_ = 0;
};

struct BatchItem {
  std::optional<GenerationRecord> record;
  std::optional<Error> error;

  bool ok() const noexcept { return record.has_value(); }
};

// Cache-first completion. Concurrent requests for the same digest share one
// backend call, so backend invocations equal the number of distinct digests
// that missed the cache.
class Completer {
 public:
  Completer(CompletionBackend& backend, ResponseCache& cache);

  GenerationRecord complete(const Prompt& prompt, const GenerationParams& params);

  // Results follow input order. At most max_in_flight prompts are outstanding;
  // failures are reported per item.
  std::vector<BatchItem> batch_complete(std::span<const Prompt> prompts,
                                        const GenerationParams& params,
                                        std::size_t max_in_flight);

  std::size_t backend_invocations() const noexcept { return invocations_.load(); }
  CompletionBackend& backend() noexcept { return *backend_; }

 private:
  CompletionBackend* backend_;
  ResponseCache* cache_;
  std::atomic<std::size_t> invocations_{0};
  std::mutex inflight_mu_;
  std::unordered_map<std::string, std::shared_future<GenerationRecord>> inflight_;
};

}  // namespace mbl

#endif  // MBL_LLM_HPP_
