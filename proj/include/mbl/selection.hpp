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

#ifndef MBL_SELECTION_HPP_
#define MBL_SELECTION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mbl/corpus.hpp"
#include "mbl/embeddings.hpp"
#include "mbl/metrics.hpp"

namespace mbl {

enum class SelectionMethod { kSari, kCompressionRatio, kBertPrecision, kRandom, kKate, kZeroShot };

std::string_view method_name(SelectionMethod m);
// "sari", "cr", "bertprec", "random", "kate", "zero-shot".
SelectionMethod parse_method(std::string_view name);
// The metric a metric-based method scores with; throws for the baselines.
Metric method_metric(SelectionMethod m);
SelectionMethod metric_method(Metric m);

enum class Ordering { kHighToLow, kLowToHigh, kRandom };

std::string_view ordering_name(Ordering o);
// "high-to-low", "low-to-high", "random".
Ordering parse_ordering(std::string_view name);

// A candidate (complex, reference) pair. `score` is empty for pairs drawn by
// the random baseline.
struct ScoredPair {
  std::string instance_id;
  std::size_t reference_index = 0;
  Sentence source;
  Sentence simple;
  SelectionMethod method = SelectionMethod::kSari;
  std::optional<double> score;

  friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

struct ExampleSet {
  std::vector<ScoredPair> pairs;
  std::size_t k = 0;
  Ordering ordering = Ordering::kHighToLow;
  std::optional<std::uint64_t> ordering_seed;
  SelectionMethod method = SelectionMethod::kSari;
  std::optional<std::uint64_t> selection_seed;
  // Fewer candidates than k were available.
  bool truncated = false;

  friend bool operator==(const ExampleSet&, const ExampleSet&) = default;
};

// Canonical rank: score descending, then instance id ascending (byte-wise),
// then reference index ascending. Unscored pairs compare equal on score.
bool ranks_before(const ScoredPair& a, const ScoredPair& b);

// True when the pair order agrees with `set.ordering` (always true for
// kRandom).
bool ordering_consistent(const ExampleSet& set);

struct SariScoringCall {
  std::string_view instance_id;
  std::size_t prediction_index;
  const TokenList& source;
  const TokenList& prediction;
  std::span<const TokenList* const> references;
  double score;
};

struct ScoreOptions {
  const EmbeddingProvider* embeddings = nullptr;
  unsigned threads = 1;
  // BERTPrec scores within this distance of 1 count as duplicates.
  double duplicate_tolerance = 1e-9;
  // Observes every leave-one-out SARI evaluation. May be called concurrently
  // when threads > 1.
  std::function<void(const SariScoringCall&)> on_sari;
};

struct PairScores {
  std::vector<ScoredPair> pairs;  // instance order, then reference index
  std::size_t skipped_instances = 0;  // SARI: fewer than two references
  std::size_t discarded_duplicates = 0;  // BERTPrec: score of 1
};

// Scores every (source, reference) pair of `corpus` with `metric`:
//   cr       compression_ratio(source, reference)
//   bertprec bertscore_precision(candidate = reference, reference = source);
//            pairs scoring 1 are dropped
//   sari     the reference as prediction against the source and the other
//            references of its instance
PairScores score_pairs(const Corpus& corpus, Metric metric, const ScoreOptions& options = {});

// The k best pairs by ranks_before, arranged high to low. k > pairs.size()
// returns everything with `truncated` set.
ExampleSet select_top_k(std::span<const ScoredPair> pairs, std::size_t k);

// Same pairs, rearranged. kLowToHigh is the exact reverse of kHighToLow;
// kRandom shuffles the kHighToLow arrangement with seeded_shuffle.
ExampleSet order_examples(ExampleSet set, Ordering ordering, std::uint64_t seed = 0);

// k distinct (instance, reference) pairs drawn without replacement, in draw
// order.
ExampleSet random_select(const Corpus& corpus, std::size_t k, std::uint64_t seed);

struct KateOptions {
  std::size_t reference_index = 0;
  // Most similar example last, i.e. adjacent to the query in the prompt.
  bool nearest_last = true;
};

// Nearest-neighbour retrieval over the complex sides of a development corpus.
// Embeds the corpus once; select() is safe to call concurrently when the
// provider is.
class KateIndex {
 public:
  KateIndex(const Corpus& dev, const EmbeddingProvider& embeddings, KateOptions options = {});

  ExampleSet select(const Sentence& query, std::size_t k, std::string_view query_id = {}) const;

 private:
  const Corpus* dev_;
  const EmbeddingProvider* embeddings_;
  KateOptions options_;
  std::vector<SentenceEmbedding> keys_;
};

ExampleSet kate_select(const Corpus& dev, const Sentence& query, std::size_t k,
                       const EmbeddingProvider* embeddings, KateOptions options = {});

// Scored-pair dump: one JSON object per line with instance_id,
// reference_index, metric, score, source and simple.
nlohmann::json to_json(const ScoredPair& pair);
ScoredPair scored_pair_from_json(const nlohmann::json& j);
void write_scored_pairs(std::span<const ScoredPair> pairs, std::ostream& out);
std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& file);

nlohmann::json to_json(const ExampleSet& set);
ExampleSet example_set_from_json(const nlohmann::json& j);

}  // namespace mbl

#endif  // MBL_SELECTION_HPP_
