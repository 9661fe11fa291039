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

#include "mbl/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "mbl/error.hpp"
#include "mbl/kernels.hpp"

namespace mbl {
namespace {

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

OperationStats sari_order(const TokenList& source, const TokenList& prediction,
                          std::span<const TokenList* const> references, int n) {
  const NgramMultiset src(source, n);
  const NgramMultiset pred(prediction, n);
  NgramMultiset refs;
  for (const TokenList* r : references) refs.merge(NgramMultiset(*r, n));
  const long num_refs = static_cast<long>(references.size());

  OperationStats st;

  // keep
  double keep_precision_sum = 0, keep_recall_sum = 0;
  std::size_t kept = 0, keepable = 0;
  // delete
  double del_precision_sum = 0;
  std::size_t deleted = 0;
  for (const auto& [gram, s_count] : src) {
    const long s = s_count * num_refs;
    const long c = pred.count(gram) * num_refs;
    const long r = refs.count(gram);
    if (r > 0) ++keepable;
    if (c > 0) {
      const long keep = std::min(s, c);
      const long good = std::min(keep, r);
      ++kept;
      keep_precision_sum += static_cast<double>(good) / keep;
      const long all = std::min(s, r);
      if (all > 0) keep_recall_sum += static_cast<double>(good) / all;
    }
    if (s > c) {
      const long del = s - c;
      const long good = std::max(del - r, 0L);
      ++deleted;
      del_precision_sum += static_cast<double>(good) / del;
    }
  }
  st.p_keep = ratio(keep_precision_sum, static_cast<double>(kept));
  st.r_keep = ratio(keep_recall_sum, static_cast<double>(keepable));
  st.f_keep = f1(st.p_keep, st.r_keep);
  st.p_del = ratio(del_precision_sum, static_cast<double>(deleted));

  // add: set semantics
  std::size_t added = 0, added_good = 0, addable = 0;
  for (const auto& [gram, count] : pred) {
    if (src.count(gram) > 0) continue;
    ++added;
    if (refs.count(gram) > 0) ++added_good;
  }
  for (const auto& [gram, count] : refs) {
    if (src.count(gram) == 0) ++addable;
  }
  st.p_add = ratio(static_cast<double>(added_good), static_cast<double>(added));
  st.r_add = ratio(static_cast<double>(added_good), static_cast<double>(addable));
  st.f_add = f1(st.p_add, st.r_add);
  return st;
}

std::vector<const TokenList*> token_pointers(std::span<const Sentence> sentences) {
  std::vector<const TokenList*> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(&s.tokens());
  return out;
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kSari: return "sari";
    case Metric::kBleu: return "bleu";
    case Metric::kCompressionRatio: return "cr";
    case Metric::kBertPrecision: return "bertprec";
  }
  return "sari";
}

Metric parse_metric(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "sari") return Metric::kSari;
  if (lower == "bleu") return Metric::kBleu;
  if (lower == "cr" || lower == "compression_ratio") return Metric::kCompressionRatio;
  if (lower == "bertprec" || lower == "bert_precision") return Metric::kBertPrecision;
  throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + std::string(name) + "'");
}

double OperationScores::sari() const {
  return (average.f_add + average.f_keep + average.p_del) / 3.0;
}

MetricScore compression_ratio(const Sentence& source, const Sentence& simple) {
  const auto num = char_count(source.raw());
  const auto den = char_count(simple.raw());
  if (num == 0 || den == 0) {
    throw Error(ErrorCode::kEmptySentence, "compression ratio of an empty sentence");
  }
  return {Metric::kCompressionRatio, static_cast<double>(num) / static_cast<double>(den)};
}

MetricScore bertscore_precision(const EmbeddingMatrix& candidate,
                                const EmbeddingMatrix& reference) {
  if (candidate.empty() || reference.empty()) {
    throw Error(ErrorCode::kEmptyEmbedding, "BERTScore needs non-empty matrices");
  }
  if (candidate.dim() != reference.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(candidate.dim()) + " vs " + std::to_string(reference.dim()));
  }
  std::vector<double> best(candidate.rows());
  kernels::max_inner_products(candidate.values(), reference.values(), candidate.dim(), best);
  double sum = 0;
  for (double b : best) sum += b;
  const double value = std::clamp(sum / static_cast<double>(best.size()), -1.0, 1.0);
  return {Metric::kBertPrecision, value};
}

OperationScores sari_operation_scores(const TokenList& source,
                                      const TokenList& prediction,
                                      std::span<const TokenList* const> references) {
  if (references.empty()) throw Error(ErrorCode::kNoReferences, "SARI needs references");
  OperationScores out;
  for (int n = 1; n <= OperationScores::kMaxOrder; ++n) {
    const auto st = sari_order(source, prediction, references, n);
    out.per_order[n - 1] = st;
    auto& avg = out.average;
    avg.p_add += st.p_add;
    avg.r_add += st.r_add;
    avg.f_add += st.f_add;
    avg.p_keep += st.p_keep;
    avg.r_keep += st.r_keep;
    avg.f_keep += st.f_keep;
    avg.p_del += st.p_del;
  }
  auto& avg = out.average;
  constexpr double k = OperationScores::kMaxOrder;
  avg.p_add /= k;
  avg.r_add /= k;
  avg.f_add /= k;
  avg.p_keep /= k;
  avg.r_keep /= k;
  avg.f_keep /= k;
  avg.p_del /= k;
  return out;
}

MetricScore sari_sentence(const TokenList& source, const TokenList& prediction,
                          std::span<const TokenList* const> references) {
  return {Metric::kSari, 100.0 * sari_operation_scores(source, prediction, references).sari()};
}

MetricScore sari_sentence(const Sentence& source, const Sentence& prediction,
                          std::span<const Sentence> references) {
  const auto refs = token_pointers(references);
  return sari_sentence(source.tokens(), prediction.tokens(), refs);
}

MetricScore sari_corpus(std::span<const Sentence> sources,
                        std::span<const Sentence> predictions,
                        std::span<const std::vector<Sentence>> references) {
  if (sources.size() != predictions.size() || sources.size() != references.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(sources.size()) + " sources, " +
                    std::to_string(predictions.size()) + " predictions, " +
                    std::to_string(references.size()) + " reference lists");
  }
  if (sources.empty()) throw Error(ErrorCode::kEmptyCorpus, "no sentences");
  double sum = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (references[i].empty()) {
      throw Error(ErrorCode::kNoReferences, "sentence " + std::to_string(i));
    }
    sum += sari_sentence(sources[i], predictions[i], references[i]).value;
  }
  return {Metric::kSari, sum / static_cast<double>(sources.size())};
}

BleuDetail bleu_corpus_detail(std::span<const Sentence> predictions,
                              std::span<const std::vector<Sentence>> references,
                              int max_order) {
  if (max_order < 1 || max_order > 9) {
    throw Error(ErrorCode::kInvalidArgument,
                "BLEU order must be in 1..9, got " + std::to_string(max_order));
  }
  if (predictions.size() != references.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(predictions.size()) + " predictions, " +
                    std::to_string(references.size()) + " reference lists");
  }
  if (predictions.empty()) throw Error(ErrorCode::kEmptyCorpus, "no sentences");

  std::vector<long> correct(max_order, 0), total(max_order, 0);
  BleuDetail d;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& hyp = predictions[i].tokens();
    if (references[i].empty()) {
      throw Error(ErrorCode::kNoReferences, "sentence " + std::to_string(i));
    }
    const long hyp_len = static_cast<long>(hyp.size());
    long closest = -1;
    for (const auto& ref : references[i]) {
      const long len = static_cast<long>(ref.tokens().size());
      const long diff = std::labs(len - hyp_len);
      const long best_diff = std::labs(closest - hyp_len);
      if (closest < 0 || diff < best_diff || (diff == best_diff && len < closest)) {
        closest = len;
      }
    }
    d.hypothesis_length += hyp_len;
    d.reference_length += closest;
    for (int n = 1; n <= max_order; ++n) {
      const NgramMultiset h(hyp, n);
      NgramMultiset max_ref(std::span<const std::string>{}, n);
      for (const auto& ref : references[i]) max_ref.max_with(NgramMultiset(ref.tokens(), n));
      for (const auto& [gram, count] : h) {
        correct[n - 1] += std::min(count, max_ref.count(gram));
      }
      total[n - 1] += h.total();
    }
  }

  d.precisions.resize(max_order);
  double log_sum = 0;
  bool zero = false;
  for (int n = 0; n < max_order; ++n) {
    d.precisions[n] = ratio(static_cast<double>(correct[n]), static_cast<double>(total[n]));
    if (correct[n] == 0) {
      zero = true;
    } else {
      log_sum += std::log(d.precisions[n]);
    }
  }
  if (d.hypothesis_length >= d.reference_length) {
    d.brevity_penalty = 1.0;
  } else if (d.hypothesis_length > 0) {
    d.brevity_penalty = std::exp(1.0 - static_cast<double>(d.reference_length) /
                                           static_cast<double>(d.hypothesis_length));
  } else {
    d.brevity_penalty = 0.0;
  }
  d.score = zero ? 0.0 : 100.0 * d.brevity_penalty * std::exp(log_sum / max_order);
  d.score = std::min(d.score, 100.0);
  return d;
}

MetricScore bleu_corpus(std::span<const Sentence> predictions,
                        std::span<const std::vector<Sentence>> references, int max_order) {
  return {Metric::kBleu, bleu_corpus_detail(predictions, references, max_order).score};
}

}  // namespace mbl
