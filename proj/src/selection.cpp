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

#include "mbl/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include "mbl/error.hpp"
#include "mbl/random.hpp"

namespace mbl {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string sentence_id(const std::string& instance, std::optional<std::size_t> ref) {
  return ref ? instance + "#ref" + std::to_string(*ref) : instance + "#src";
}

void score_instance(const InstanceGroup& inst, Metric metric, const ScoreOptions& options,
                    std::vector<ScoredPair>& out, std::size_t& skipped,
                    std::size_t& discarded) {
  const SelectionMethod method = metric_method(metric);
  const auto make = [&](std::size_t r, double score) {
    ScoredPair p;
    p.instance_id = inst.id;
    p.reference_index = r;
    p.source = inst.source;
    p.simple = inst.references[r];
    p.method = method;
    p.score = score;
    return p;
  };

  switch (metric) {
    case Metric::kCompressionRatio:
      for (std::size_t r = 0; r < inst.references.size(); ++r) {
        out.push_back(make(r, compression_ratio(inst.source, inst.references[r]).value));
      }
      break;
    case Metric::kBertPrecision: {
      const auto source = options.embeddings->embed_tokens(inst.source, sentence_id(inst.id, {}));
      for (std::size_t r = 0; r < inst.references.size(); ++r) {
        const auto simple = options.embeddings->embed_tokens(inst.references[r], sentence_id(inst.id, r));
        const double score = bertscore_precision(simple, source).value;
        if (std::fabs(score - 1.0) <= options.duplicate_tolerance) {
          ++discarded;
          continue;
        }
        out.push_back(make(r, score));
      }
      break;
    }
    case Metric::kSari: {
      const std::size_t n = inst.references.size();
      if (n < 2) {
        ++skipped;
        break;
      }
      std::vector<const TokenList*> others;
      others.reserve(n - 1);
      for (std::size_t r = 0; r < n; ++r) {
        others.clear();
        for (std::size_t o = 0; o < n; ++o) {
          if (o != r) others.push_back(&inst.references[o].tokens());
        }
        const auto& prediction = inst.references[r].tokens();
        const double score = sari_sentence(inst.source.tokens(), prediction, others).value;
        if (options.on_sari) {
          options.on_sari(SariScoringCall{inst.id, r, inst.source.tokens(), prediction, others, score});
        }
        out.push_back(make(r, score));
      }
      break;
    }
    case Metric::kBleu:
      throw Error(ErrorCode::kInvalidArgument, "BLEU is not a selection metric");
  }
}

}  // namespace

std::string_view method_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::kSari: return "sari";
    case SelectionMethod::kCompressionRatio: return "cr";
    case SelectionMethod::kBertPrecision: return "bertprec";
    case SelectionMethod::kRandom: return "random";
    case SelectionMethod::kKate: return "kate";
    case SelectionMethod::kZeroShot: return "zero-shot";
  }
  return "sari";
}

SelectionMethod parse_method(std::string_view name) {
  const std::string l = lower(name);
  if (l == "random") return SelectionMethod::kRandom;
  if (l == "kate") return SelectionMethod::kKate;
  if (l == "zero-shot" || l == "zeroshot" || l == "zero_shot") return SelectionMethod::kZeroShot;
  return metric_method(parse_metric(l));
}

Metric method_metric(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::kSari: return Metric::kSari;
    case SelectionMethod::kCompressionRatio: return Metric::kCompressionRatio;
    case SelectionMethod::kBertPrecision: return Metric::kBertPrecision;
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(method_name(m)) + " does not score with a metric");
  }
}

SelectionMethod metric_method(Metric m) {
  switch (m) {
    case Metric::kSari: return SelectionMethod::kSari;
    case Metric::kCompressionRatio: return SelectionMethod::kCompressionRatio;
    case Metric::kBertPrecision: return SelectionMethod::kBertPrecision;
    case Metric::kBleu: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "BLEU is not a selection metric");
}

std::string_view ordering_name(Ordering o) {
  switch (o) {
    case Ordering::kHighToLow: return "high-to-low";
    case Ordering::kLowToHigh: return "low-to-high";
    case Ordering::kRandom: return "random";
  }
  return "high-to-low";
}

Ordering parse_ordering(std::string_view name) {
  const std::string l = lower(name);
  if (l == "high-to-low" || l == "high_to_low" || l == "hightolow") return Ordering::kHighToLow;
  if (l == "low-to-high" || l == "low_to_high" || l == "lowtohigh") return Ordering::kLowToHigh;
  if (l == "random") return Ordering::kRandom;
  throw Error(ErrorCode::kInvalidArgument, "unknown ordering '" + std::string(name) + "'");
}

bool ranks_before(const ScoredPair& a, const ScoredPair& b) {
  const double sa = a.score.value_or(0.0);
  const double sb = b.score.value_or(0.0);
  if (sa != sb) return sa > sb;
  if (a.instance_id != b.instance_id) return a.instance_id < b.instance_id;
  return a.reference_index < b.reference_index;
}

bool ordering_consistent(const ExampleSet& set) {
  const auto& p = set.pairs;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double prev = p[i - 1].score.value_or(0.0);
    const double cur = p[i].score.value_or(0.0);
    if (set.ordering == Ordering::kHighToLow && cur > prev) return false;
    if (set.ordering == Ordering::kLowToHigh && cur < prev) return false;
  }
  return true;
}

PairScores score_pairs(const Corpus& corpus, Metric metric, const ScoreOptions& options) {
  if (corpus.instances.empty()) throw Error(ErrorCode::kEmptyCorpus, corpus.name);
  if (metric == Metric::kBleu) {
    throw Error(ErrorCode::kInvalidArgument, "BLEU is not a selection metric");
  }
  if (metric == Metric::kBertPrecision && options.embeddings == nullptr) {
    throw Error(ErrorCode::kEmbeddingBackendMissing, "BERTPrec scoring needs an embedding backend");
  }
  if (metric == Metric::kSari && corpus.instances.size() > 0) {
    const bool any_multi = std::any_of(corpus.instances.begin(), corpus.instances.end(),
                                       [](const auto& i) { return i.references.size() >= 2; });
    if (!any_multi) {
      throw Error(ErrorCode::kSariNeedsMultipleReferences,
                  "leave-one-out SARI needs at least two references per instance; '" +
                      corpus.name + "' has one");
    }
  }

  const std::size_t n = corpus.instances.size();
  std::vector<std::vector<ScoredPair>> slots(n);
  std::vector<std::size_t> skipped(n, 0), discarded(n, 0);
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      score_instance(corpus.instances[i], metric, options, slots[i], skipped[i], discarded[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            score_instance(corpus.instances[i], metric, options, slots[i], skipped[i], discarded[i]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }

  PairScores out;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& p : slots[i]) out.pairs.push_back(std::move(p));
    out.skipped_instances += skipped[i];
    out.discarded_duplicates += discarded[i];
  }
  return out;
}

ExampleSet select_top_k(std::span<const ScoredPair> pairs, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  ExampleSet set;
  set.k = k;
  set.ordering = Ordering::kHighToLow;
  if (!pairs.empty()) set.method = pairs.front().method;
  set.truncated = k > pairs.size();
  const std::size_t take = std::min(k, pairs.size());
  set.pairs.assign(pairs.begin(), pairs.end());
  std::partial_sort(set.pairs.begin(), set.pairs.begin() + static_cast<std::ptrdiff_t>(take),
                    set.pairs.end(), ranks_before);
  set.pairs.resize(take);
  return set;
}

ExampleSet order_examples(ExampleSet set, Ordering ordering, std::uint64_t seed) {
  std::sort(set.pairs.begin(), set.pairs.end(), ranks_before);
  set.ordering = ordering;
  set.ordering_seed.reset();
  switch (ordering) {
    case Ordering::kHighToLow:
      break;
    case Ordering::kLowToHigh:
      std::reverse(set.pairs.begin(), set.pairs.end());
      break;
    case Ordering::kRandom:
      seeded_shuffle(std::span<ScoredPair>(set.pairs), seed);
      set.ordering_seed = seed;
      break;
  }
  return set;
}

ExampleSet random_select(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  std::vector<ScoredPair> population;
  for (const auto& inst : corpus.instances) {
    for (std::size_t r = 0; r < inst.references.size(); ++r) {
      ScoredPair p;
      p.instance_id = inst.id;
      p.reference_index = r;
      p.source = inst.source;
      p.simple = inst.references[r];
      p.method = SelectionMethod::kRandom;
      population.push_back(std::move(p));
    }
  }
  ExampleSet set;
  set.k = k;
  set.method = SelectionMethod::kRandom;
  set.selection_seed = seed;
  set.ordering = Ordering::kRandom;
  set.ordering_seed = seed;
  set.truncated = k > population.size();
  const std::size_t take = std::min(k, population.size());
  seeded_partial_shuffle(std::span<ScoredPair>(population), take, seed);
  population.resize(take);
  set.pairs = std::move(population);
  return set;
}

KateIndex::KateIndex(const Corpus& dev, const EmbeddingProvider& embeddings, KateOptions options)
    : dev_(&dev), embeddings_(&embeddings), options_(options) {
  keys_.reserve(dev.instances.size());
  for (const auto& inst : dev.instances) {
    keys_.push_back(embeddings.embed_sentence(inst.source, sentence_id(inst.id, {})));
  }
}

ExampleSet KateIndex::select(const Sentence& query, std::size_t k, std::string_view query_id) const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const auto q = embeddings_->embed_sentence(query, query_id);
  std::vector<ScoredPair> candidates;
  candidates.reserve(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const auto& inst = dev_->instances[i];
    ScoredPair p;
    p.instance_id = inst.id;
    p.reference_index = std::min(options_.reference_index, inst.references.size() - 1);
    p.source = inst.source;
    p.simple = inst.references[p.reference_index];
    p.method = SelectionMethod::kKate;
    p.score = cosine(q, keys_[i]);
    candidates.push_back(std::move(p));
  }
  ExampleSet set = select_top_k(candidates, k);
  set.method = SelectionMethod::kKate;
  if (options_.nearest_last) {
    std::reverse(set.pairs.begin(), set.pairs.end());
    set.ordering = Ordering::kLowToHigh;
  }
  return set;
}

ExampleSet kate_select(const Corpus& dev, const Sentence& query, std::size_t k,
                       const EmbeddingProvider* embeddings, KateOptions options) {
  if (embeddings == nullptr) {
    throw Error(ErrorCode::kEmbeddingBackendMissing, "KATE retrieval needs an embedding backend");
  }
  return KateIndex(dev, *embeddings, options).select(query, k);
}

json to_json(const ScoredPair& pair) {
  json j;
  j["instance_id"] = pair.instance_id;
  j["reference_index"] = pair.reference_index;
  j["metric"] = method_name(pair.method);
  j["score"] = pair.score ? json(*pair.score) : json("unscored");
  j["source"] = pair.source.raw();
  j["simple"] = pair.simple.raw();
  return j;
}

ScoredPair scored_pair_from_json(const json& j) {
  try {
    ScoredPair p;
    p.instance_id = j.at("instance_id").get<std::string>();
    p.reference_index = j.at("reference_index").get<std::size_t>();
    p.method = parse_method(j.at("metric").get<std::string>());
    const auto& score = j.at("score");
    if (score.is_number()) p.score = score.get<double>();
    p.source = Sentence::from_raw(j.at("source").get<std::string>());
    p.simple = Sentence::from_raw(j.at("simple").get<std::string>());
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

void write_scored_pairs(std::span<const ScoredPair> pairs, std::ostream& out) {
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, file.string());
  std::vector<ScoredPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(scored_pair_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json to_json(const ExampleSet& set) {
  json j;
  j["k"] = set.k;
  j["selection_method"] = method_name(set.method);
  j["selection_seed"] = set.selection_seed ? json(*set.selection_seed) : json(nullptr);
  j["ordering"] = ordering_name(set.ordering);
  j["ordering_seed"] = set.ordering_seed ? json(*set.ordering_seed) : json(nullptr);
  j["truncated"] = set.truncated;
  auto pairs = json::array();
  for (const auto& p : set.pairs) pairs.push_back(to_json(p));
  j["pairs"] = std::move(pairs);
  return j;
}

ExampleSet example_set_from_json(const json& j) {
  try {
    ExampleSet set;
    set.k = j.at("k").get<std::size_t>();
    set.method = parse_method(j.at("selection_method").get<std::string>());
    if (j.contains("selection_seed") && !j["selection_seed"].is_null()) {
      set.selection_seed = j["selection_seed"].get<std::uint64_t>();
    }
    set.ordering = parse_ordering(j.at("ordering").get<std::string>());
    if (j.contains("ordering_seed") && !j["ordering_seed"].is_null()) {
      set.ordering_seed = j["ordering_seed"].get<std::uint64_t>();
    }
    set.truncated = j.value("truncated", false);
    for (const auto& p : j.at("pairs")) set.pairs.push_back(scored_pair_from_json(p));
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

}  // namespace mbl
