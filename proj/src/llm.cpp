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

#include "mbl/llm.hpp"

#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "mbl/digest.hpp"

namespace mbl {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

ordered_json record_body(const GenerationRecord& r) { return to_json(r); }

std::string check_of(const ordered_json& body) { return sha256_hex(body.dump()); }

}  // namespace

std::string_view backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttp: return "http";
    case BackendKind::kMockEcho: return "mock-echo";
    case BackendKind::kMockFirstReference: return "mock-first-reference";
  }
  return "http";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "http") return BackendKind::kHttp;
  if (name == "mock-echo") return BackendKind::kMockEcho;
  if (name == "mock-first-reference") return BackendKind::kMockFirstReference;
  throw Error(ErrorCode::kInvalidArgument, "unknown backend '" + std::string(name) + "'");
}

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
  }
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
}

ordered_json to_json(const GenerationParams& p) {
  ordered_json j;
  j["model"] = p.model_id;
  j["temperature"] = p.temperature;
  j["max_tokens"] = p.max_tokens;
  j["top_p"] = p.top_p;
  j["frequency_penalty"] = p.frequency_penalty;
  j["presence_penalty"] = p.presence_penalty;
  return j;
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.model_id = j.value("model", p.model_id);
  p.temperature = j.value("temperature", p.temperature);
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.top_p = j.value("top_p", p.top_p);
  p.frequency_penalty = j.value("frequency_penalty", p.frequency_penalty);
  p.presence_penalty = j.value("presence_penalty", p.presence_penalty);
  p.validate();
  return p;
}

ordered_json to_json(const GenerationRecord& r) {
  ordered_json j;
  j["digest"] = r.digest;
  j["backend"] = backend_name(r.backend);
  j["model"] = r.model_id;
  j["params"] = to_json(r.params);
  j["prompt"] = r.prompt_text;
  j["completion"] = r.completion_text;
  j["timestamp"] = r.timestamp;
  return j;
}

GenerationRecord record_from_json(const json& j) {
  GenerationRecord r;
  r.digest = j.at("digest").get<std::string>();
  r.backend = parse_backend(j.at("backend").get<std::string>());
  r.model_id = j.at("model").get<std::string>();
  r.params = params_from_json(j.at("params"));
  r.prompt_text = j.at("prompt").get<std::string>();
  r.completion_text = j.at("completion").get<std::string>();
  r.timestamp = j.value("timestamp", "");
  return r;
}

// --- mocks ------------------------------------------------------------------

std::string MockEchoBackend::complete(const Prompt& prompt, const GenerationParams&) {
  return prompt.query;
}

MockFirstReferenceBackend::MockFirstReferenceBackend(const Corpus& test) {
  for (const auto& inst : test.instances) {
    reference_by_query_.emplace(inst.source.raw(), inst.references.front().raw());
  }
}

void MockFirstReferenceBackend::add(std::string query, std::string reference) {
  reference_by_query_[std::move(query)] = std::move(reference);
}

std::string MockFirstReferenceBackend::complete(const Prompt& prompt, const GenerationParams&) {
  const auto it = reference_by_query_.find(prompt.query);
  if (it == reference_by_query_.end()) {
    throw Error(ErrorCode::kBackendUnavailable, "no reference known for query '" + prompt.query + "'");
  }
  return it->second;
}

// --- http -------------------------------------------------------------------

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig c;
  if (const char* key = std::getenv("OPENAI_API_KEY")) c.api_key = key;
  if (const char* url = std::getenv("OPENAI_BASE_URL")) c.base_url = url;
  return c;
}

HttpCompletionBackend::HttpCompletionBackend(HttpBackendConfig config) : config_(std::move(config)) {
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  host_ = url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  if (prefix_.size() >= 3 && prefix_.compare(prefix_.size() - 3, 3, "/v1") == 0) {
    prefix_.resize(prefix_.size() - 3);
  }
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

json HttpCompletionBackend::request_body(const Prompt& prompt, const GenerationParams& params,
                                         bool legacy_completions) {
  json body;
  body["model"] = params.model_id;
  if (legacy_completions) {
    body["prompt"] = prompt.text;
  } else {
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt.text}}});
  }
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  body["top_p"] = params.top_p;
  body["frequency_penalty"] = params.frequency_penalty;
  body["presence_penalty"] = params.presence_penalty;
  return body;
}

std::string HttpCompletionBackend::complete(const Prompt& prompt, const GenerationParams& params) {
  if (config_.api_key.empty()) {
    throw Error(ErrorCode::kAuthError, "no API key configured (OPENAI_API_KEY)");
  }
  const std::string path =
      prefix_ + (config_.legacy_completions ? "/v1/completions" : "/v1/chat/completions");
  const std::string body = request_body(prompt, params, config_.legacy_completions).dump();
  const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

  Error last(ErrorCode::kBackendUnavailable, "no attempt made");
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    client.set_write_timeout(config_.timeout_seconds);
    const auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last = Error(ErrorCode::kBackendUnavailable, host_ + path + ": " + httplib::to_string(res.error()));
    } else if (res->status == 200) {
      try {
        const auto reply = json::parse(res->body);
        const auto& choice = reply.at("choices").at(0);
        return config_.legacy_completions ? choice.at("text").get<std::string>()
                                          : choice.at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kBackendUnavailable, "malformed completion response: " + std::string(e.what()));
      }
    } else if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::kAuthError, "HTTP " + std::to_string(res->status) + " from " + host_);
    } else if (res->status == 429) {
      last = Error(ErrorCode::kRateLimited, "HTTP 429 from " + host_);
    } else if (res->status >= 500) {
      last = Error(ErrorCode::kBackendUnavailable, "HTTP " + std::to_string(res->status) + " from " + host_);
    } else {
      throw Error(ErrorCode::kBackendUnavailable,
                  "HTTP " + std::to_string(res->status) + " from " + host_ + ": " + res->body.substr(0, 200));
    }
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw last;
}

// --- cache ------------------------------------------------------------------

std::string ResponseCache::encode_line(const GenerationRecord& record) {
  auto body = record_body(record);
  const std::string check = check_of(body);
  body["check"] = check;
  return body.dump();
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  std::string content;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }

  struct Line {
    std::size_t offset;
    std::string text;
    bool ok;
  };
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    const bool terminated = end != std::string::npos;
    if (!terminated) end = content.size();
    Line line{pos, content.substr(pos, end - pos), false};
    try {
      auto j = ordered_json::parse(line.text);
      const std::string check = j.at("check").get<std::string>();
      j.erase("check");
      auto rec = record_from_json(json::parse(j.dump()));
      line.ok = check == check_of(j) && rec.digest == prompt_digest(rec.prompt_text, rec.params);
      if (line.ok) records_[rec.digest] = std::move(rec);
    } catch (const std::exception&) {
      line.ok = false;
    }
    lines.push_back(std::move(line));
    pos = terminated ? end + 1 : end;
  }

  std::size_t first_bad = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!lines[i].ok) {
      first_bad = i;
      break;
    }
  }
  if (first_bad < lines.size()) {
    for (std::size_t i = first_bad; i < lines.size(); ++i) {
      if (lines[i].ok) {
        throw Error(ErrorCode::kCacheCorrupt,
                    path_.string() + ": damaged record at line " + std::to_string(first_bad + 1) +
                        " is followed by intact records");
      }
    }
    const std::size_t cut = lines[first_bad].offset;
    {
      std::ofstream q(path_.string() + ".quarantine", std::ios::binary | std::ios::app);
      q << content.substr(cut);
      if (content.back() != '\n') q << '\n';
    }
    quarantined_ = lines.size() - first_bad;
    content.resize(cut);
    std::filesystem::resize_file(path_, cut);
  }

  if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorCode::kMissingFile, "cannot open cache " + path_.string());
  if (!content.empty() && content.back() != '\n') out_ << '\n' << std::flush;
}

std::optional<GenerationRecord> ResponseCache::find(const std::string& digest) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = records_.find(digest);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const GenerationRecord& record) {
  const std::string line = encode_line(record);
  std::lock_guard<std::mutex> lock(mu_);
  if (out_.is_open()) {
    out_ << line << '\n';
    out_.flush();
  }
  records_[record.digest] = record;
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_.size();
}

// --- completer --------------------------------------------------------------

Completer::Completer(CompletionBackend& backend, ResponseCache& cache)
    : backend_(&backend), cache_(&cache) {}

GenerationRecord Completer::complete(const Prompt& prompt, const GenerationParams& params) {
  params.validate();
  const std::string digest = prompt_digest(prompt.text, params);
  if (auto hit = cache_->find(digest)) return *hit;

  std::promise<GenerationRecord> promise;
  std::shared_future<GenerationRecord> future;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(inflight_mu_);
    if (const auto it = inflight_.find(digest); it != inflight_.end()) {
      future = it->second;
    } else {
      // Re-check under the lock: another thread may have finished meanwhile.
      if (auto hit = cache_->find(digest)) return *hit;
      future = promise.get_future().share();
      inflight_.emplace(digest, future);
      owner = true;
    }
  }
  if (!owner) return future.get();

  try {
    ++invocations_;
    GenerationRecord rec;
    rec.digest = digest;
    rec.prompt_text = prompt.text;
    rec.completion_text = backend_->complete(prompt, params);
    rec.model_id = params.model_id;
    rec.params = params;
    rec.timestamp = utc_timestamp();
    rec.backend = backend_->kind();
    cache_->put(rec);
    promise.set_value(rec);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard<std::mutex> lock(inflight_mu_);
    inflight_.erase(digest);
  }
  return future.get();
}

std::vector<BatchItem> Completer::batch_complete(std::span<const Prompt> prompts,
                                                 const GenerationParams& params,
                                                 std::size_t max_in_flight) {
  if (max_in_flight < 1) throw Error(ErrorCode::kInvalidArgument, "max_in_flight must be >= 1");
  std::vector<BatchItem> items(prompts.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < prompts.size(); i = next++) {
      try {
        items[i].record = complete(prompts[i], params);
      } catch (const Error& e) {
        items[i].error = e;
      } catch (const std::exception& e) {
        items[i].error = Error(ErrorCode::kBackendUnavailable, e.what());
      }
    }
  };
  const std::size_t workers = std::min(max_in_flight, prompts.size());
  if (workers <= 1) {
    work();
    return items;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  return items;
}

}  // namespace mbl
