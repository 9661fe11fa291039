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

#ifndef MBL_METRICS_HPP_
#define MBL_METRICS_HPP_

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "mbl/corpus.hpp"
#include "mbl/embeddings.hpp"
#include "mbl/ngram.hpp"

namespace mbl {

enum class Metric { kSari, kBleu, kCompressionRatio, kBertPrecision };

std::string_view metric_name(Metric m);
// Accepts "sari", "bleu", "cr", "bertprec" (case-insensitive).
Metric parse_metric(std::string_view name);

// SARI and BLEU are on the 0-100 scale, CR is positive, BERTPrec in [-1, 1].
struct MetricScore {
  Metric metric;
  double value;
};

// Add/keep/delete statistics for one n-gram order.
struct OperationStats {
  double p_add = 0, r_add = 0, f_add = 0;
  double p_keep = 0, r_keep = 0, f_keep = 0;
  double p_del = 0;
};

struct OperationScores {
  static constexpr int kMaxOrder = 4;
  std::array<OperationStats, kMaxOrder> per_order{};
  OperationStats average;  // arithmetic mean over orders 1..4
  // (f_add + f_keep + p_del) / 3 of the averages, on the 0-1 scale.
  double sari() const;
};

// char_count(source) / char_count(simple) over the raw text.
MetricScore compression_ratio(const Sentence& source, const Sentence& simple);

// Mean over candidate rows of the best inner product with any reference row.
MetricScore bertscore_precision(const EmbeddingMatrix& candidate,
                                const EmbeddingMatrix& reference);

// Token-level SARI. Reference n-gram counts are pooled over all references
// and weighed against source/prediction counts scaled by the reference count.
OperationScores sari_operation_scores(const TokenList& source,
                                      const TokenList& prediction,
                                      std::span<const TokenList* const> references);

MetricScore sari_sentence(const Sentence& source, const Sentence& prediction,
                          std::span<const Sentence> references);
MetricScore sari_sentence(const TokenList& source, const TokenList& prediction,
                          std::span<const TokenList* const> references);

// Mean of the sentence-level SARI values.
MetricScore sari_corpus(std::span<const Sentence> sources,
                        std::span<const Sentence> predictions,
                        std::span<const std::vector<Sentence>> references);

struct BleuDetail {
  double score = 0;  // 0-100
  std::vector<double> precisions;  // per order, 0-1
  double brevity_penalty = 0;
  long hypothesis_length = 0;
  long reference_length = 0;
};

// Multi-reference corpus BLEU without smoothing: clipped counts use the
// per-n-gram maximum over references, the effective reference length is the
// closest one (shorter on ties).
BleuDetail bleu_corpus_detail(std::span<const Sentence> predictions,
                              std::span<const std::vector<Sentence>> references,
                              int max_order = 4);
MetricScore bleu_corpus(std::span<const Sentence> predictions,
                        std::span<const std::vector<Sentence>> references,
                        int max_order = 4);

}  // namespace mbl

#endif  // MBL_METRICS_HPP_
