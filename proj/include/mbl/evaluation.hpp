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

#ifndef MBL_EVALUATION_HPP_
#define MBL_EVALUATION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mbl/corpus.hpp"
#include "mbl/embeddings.hpp"
#include "mbl/error.hpp"
#include "mbl/llm.hpp"
#include "mbl/prompting.hpp"
#include "mbl/selection.hpp"

namespace mbl {

struct SentenceScore {
  std::string id;
  double sari = 0;
  std::string prediction;

  friend bool operator==(const SentenceScore&, const SentenceScore&) = default;
};

struct EvalReport {
  std::string run_id;
  std::string corpus_name;
  double sari = 0;  // mean of per_sentence[i].sari
  double bleu = 0;
  int bleu_order = 4;
  std::vector<SentenceScore> per_sentence;
  nlohmann::ordered_json manifest;
};

// Corpus SARI (sources against all references) and corpus BLEU of
// `predictions` against every reference of `test`.
EvalReport evaluate(const Corpus& test, std::span<const Sentence> predictions, int bleu_order = 4);

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

inline constexpr std::array<std::size_t, 8> kDefaultKValues{1, 2, 4, 6, 8, 10, 15, 20};

struct ExperimentConfig {
  std::string tune_path;
  std::string test_path;
  std::vector<SelectionMethod> methods{SelectionMethod::kSari};
  std::vector<std::size_t> k_values{kDefaultKValues.begin(), kDefaultKValues.end()};
  std::vector<Ordering> orderings{Ordering::kHighToLow};
  std::uint64_t seed = 0;
  std::size_t random_repetitions = 3;
  PromptTemplate prompt_template;
  GenerationParams params;
  int bleu_order = 4;
  std::string backend = "mock-echo";
  std::string embeddings;  // provider spec, empty for none
  KateOptions kate;
  std::size_t max_in_flight = 4;
  std::size_t max_parallel_cells = 1;
  unsigned scoring_threads = 1;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct GridCell {
  SelectionMethod method = SelectionMethod::kSari;
  std::size_t k = 0;
  Ordering ordering = Ordering::kHighToLow;
  std::optional<std::uint64_t> seed;

  std::string run_id() const;
};

// Metric methods: every k x ordering. Random: every k x repetition, seeds
// seed, seed + 1, ... KATE: every k. Zero-shot, or k = 0 for any method: a
// single prompt without examples.
std::vector<GridCell> expand_grid(const ExperimentConfig& config);

struct CellResult {
  GridCell cell;
  std::optional<EvalReport> report;
  std::optional<std::string> error;
  ErrorCategory error_category = ErrorCategory::kData;
  // Instance ids of every example placed in any prompt of this cell.
  std::vector<std::string> example_ids;
};

struct GridResult {
  std::vector<CellResult> cells;
  std::size_t failed() const;
};

struct ExperimentResources {
  const Corpus& tune;
  const Corpus& test;
  Completer& completer;
  const EmbeddingProvider* embeddings = nullptr;
};

// Selects on the tune corpus, prompts once per test sentence, completes,
// parses and evaluates, for every grid cell. A failing cell records its error
// and leaves the other cells untouched.
GridResult run_experiment(const ExperimentConfig& config, const ExperimentResources& resources);

// manifest.json, reports/<run_id>.json, grid.json, grid.csv and grid.txt.
void write_grid(const GridResult& grid, const ExperimentConfig& config,
                const std::filesystem::path& dir);
nlohmann::ordered_json grid_summary_json(const GridResult& grid);
std::string grid_csv(const GridResult& grid);
std::string grid_table(const GridResult& grid);

}  // namespace mbl

#endif  // MBL_EVALUATION_HPP_
