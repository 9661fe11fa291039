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

#include "mbl/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "mbl/error.hpp"
#include "mbl/metrics.hpp"

namespace mbl {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Outcome of scoring the tune corpus once for a metric-based method.
struct ScoringOutcome {
  std::optional<PairScores> scores;
  ErrorCode code = ErrorCode::kInvalidArgument;
  std::string error;
};

ordered_json cell_manifest(const GridCell& cell, const ExperimentConfig& config,
                           const ExperimentResources& res, const ExampleSet* global) {
  ordered_json m;
  m["run_id"] = cell.run_id();
  m["selection_method"] = method_name(cell.method);
  m["k"] = cell.k;
  m["ordering"] = ordering_name(cell.ordering);
  m["seed"] = cell.seed ? ordered_json(*cell.seed) : ordered_json(nullptr);
  m["metric"] = cell.method == SelectionMethod::kSari || cell.method == SelectionMethod::kCompressionRatio ||
                        cell.method == SelectionMethod::kBertPrecision
                    ? ordered_json(metric_name(method_metric(cell.method)))
                    : ordered_json(nullptr);
  m["tune_corpus"] = {{"path", config.tune_path}, {"name", res.tune.name}};
  m["test_corpus"] = {{"path", config.test_path}, {"name", res.test.name}};
  // Everything needed to replay the grid this cell belongs to.
  m["config"] = to_json(config);
  if (global != nullptr) {
    auto examples = ordered_json::array();
    for (const auto& p : global->pairs) {
      ordered_json e;
      e["instance_id"] = p.instance_id;
      e["reference_index"] = p.reference_index;
      e["score"] = p.score ? ordered_json(*p.score) : ordered_json("unscored");
      examples.push_back(std::move(e));
    }
    m["examples"] = std::move(examples);
  }
  return m;
}

CellResult run_cell(const GridCell& cell, const ExperimentConfig& config,
                    const ExperimentResources& res,
                    const std::map<SelectionMethod, ScoringOutcome>& scoring,
                    const KateIndex* kate, const std::string& kate_error) {
  CellResult out;
  out.cell = cell;
  try {
    const bool zero_shot = cell.k == 0 || cell.method == SelectionMethod::kZeroShot;
    std::optional<ExampleSet> global;
    if (zero_shot) {
      global.emplace();
      global->method = SelectionMethod::kZeroShot;
    } else if (cell.method == SelectionMethod::kRandom) {
      global = random_select(res.tune, cell.k, cell.seed.value_or(config.seed));
    } else if (cell.method == SelectionMethod::kKate) {
      if (kate == nullptr) throw Error(ErrorCode::kEmbeddingBackendMissing, kate_error);
    } else {
      const auto& outcome = scoring.at(cell.method);
      if (!outcome.scores) throw Error(outcome.code, outcome.error);
      global = order_examples(select_top_k(outcome.scores->pairs, cell.k), cell.ordering,
                              cell.seed.value_or(config.seed));
    }

    std::vector<Prompt> prompts;
    prompts.reserve(res.test.instances.size());
    std::set<std::string> ids;
    for (const auto& inst : res.test.instances) {
      const ExampleSet examples =
          global ? *global : kate->select(inst.source, cell.k, inst.id + "#src");
      for (const auto& p : examples.pairs) ids.insert(p.instance_id);
      prompts.push_back(build_prompt(config.prompt_template, examples, inst.source, config.params));
    }
    out.example_ids.assign(ids.begin(), ids.end());

    const auto items = res.completer.batch_complete(prompts, config.params, config.max_in_flight);
    std::vector<Sentence> predictions;
    predictions.reserve(items.size());
    std::vector<std::string> failures;
    std::optional<ErrorCode> first_code;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& id = res.test.instances[i].id;
      if (!items[i].ok()) {
        failures.push_back(id + ": " + items[i].error->what());
        if (!first_code) first_code = items[i].error->code();
        continue;
      }
      try {
        predictions.push_back(parse_completion(items[i].record->completion_text));
      } catch (const Error& e) {
        failures.push_back(id + ": " + e.what());
        if (!first_code) first_code = e.code();
      }
    }
    if (!failures.empty()) {
      throw Error(*first_code, std::to_string(failures.size()) + " of " +
                                   std::to_string(items.size()) +
                                   " generations failed; first: " + failures.front());
    }

    EvalReport report = evaluate(res.test, predictions, config.bleu_order);
    report.run_id = cell.run_id();
    report.manifest = cell_manifest(cell, config, res, global ? &*global : nullptr);
    out.report = std::move(report);
  } catch (const Error& e) {
    out.error = e.what();
    out.error_category = e.category();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::string format_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace

EvalReport evaluate(const Corpus& test, std::span<const Sentence> predictions, int bleu_order) {
  if (predictions.size() != test.instances.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(test.instances.size()) + " test sentences");
  }
  if (test.instances.empty()) throw Error(ErrorCode::kEmptyCorpus, test.name);

  EvalReport r;
  r.corpus_name = test.name;
  r.bleu_order = bleu_order;
  std::vector<std::vector<Sentence>> refs;
  refs.reserve(test.instances.size());
  double sum = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& inst = test.instances[i];
    const double s = sari_sentence(inst.source, predictions[i], inst.references).value;
    r.per_sentence.push_back({inst.id, s, predictions[i].raw()});
    sum += s;
    refs.push_back(inst.references);
  }
  r.sari = sum / static_cast<double>(predictions.size());
  r.bleu = bleu_corpus(predictions, refs, bleu_order).value;
  return r;
}

ordered_json to_json(const EvalReport& report) {
  ordered_json j;
  j["run_id"] = report.run_id;
  j["corpus_name"] = report.corpus_name;
  j["sari"] = report.sari;
  j["bleu"] = report.bleu;
  j["bleu_order"] = report.bleu_order;
  auto per = ordered_json::array();
  for (const auto& s : report.per_sentence) {
    per.push_back(ordered_json{{"id", s.id}, {"sari", s.sari}, {"prediction", s.prediction}});
  }
  j["per_sentence"] = std::move(per);
  j["manifest"] = report.manifest.is_null() ? ordered_json::object() : report.manifest;
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.run_id = j.at("run_id").get<std::string>();
    r.corpus_name = j.at("corpus_name").get<std::string>();
    r.sari = j.at("sari").get<double>();
    r.bleu = j.at("bleu").get<double>();
    r.bleu_order = j.at("bleu_order").get<int>();
    for (const auto& s : j.at("per_sentence")) {
      r.per_sentence.push_back({s.at("id").get<std::string>(), s.at("sari").get<double>(),
                                s.value("prediction", "")});
    }
    r.manifest = ordered_json::parse(j.value("manifest", json::object()).dump());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("report: ") + e.what());
  }
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["tune"] = c.tune_path;
  j["test"] = c.test_path;
  auto methods = ordered_json::array();
  for (auto m : c.methods) methods.push_back(method_name(m));
  j["methods"] = std::move(methods);
  j["k_values"] = c.k_values;
  auto orderings = ordered_json::array();
  for (auto o : c.orderings) orderings.push_back(ordering_name(o));
  j["orderings"] = std::move(orderings);
  j["seed"] = c.seed;
  j["random_repetitions"] = c.random_repetitions;
  j["template"] = to_json(c.prompt_template);
  j["params"] = to_json(c.params);
  j["bleu_order"] = c.bleu_order;
  j["backend"] = c.backend;
  j["embeddings"] = c.embeddings;
  j["kate"] = {{"reference_index", c.kate.reference_index}, {"nearest_last", c.kate.nearest_last}};
  j["max_in_flight"] = c.max_in_flight;
  j["max_parallel_cells"] = c.max_parallel_cells;
  j["scoring_threads"] = c.scoring_threads;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.tune_path = j.value("tune", "");
    c.test_path = j.value("test", "");
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("k_values")) c.k_values = j["k_values"].get<std::vector<std::size_t>>();
    if (j.contains("orderings")) {
      c.orderings.clear();
      for (const auto& o : j["orderings"]) {
        c.orderings.push_back(parse_ordering(o.get<std::string>()));
      }
    }
    c.seed = j.value("seed", c.seed);
    c.random_repetitions = j.value("random_repetitions", c.random_repetitions);
    if (j.contains("template")) c.prompt_template = template_from_json(j["template"]);
    if (j.contains("params")) c.params = params_from_json(j["params"]);
    c.bleu_order = j.value("bleu_order", c.bleu_order);
    c.backend = j.value("backend", c.backend);
    c.embeddings = j.value("embeddings", c.embeddings);
    if (j.contains("kate")) {
      c.kate.reference_index = j["kate"].value("reference_index", c.kate.reference_index);
      c.kate.nearest_last = j["kate"].value("nearest_last", c.kate.nearest_last);
    }
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.max_parallel_cells = j.value("max_parallel_cells", c.max_parallel_cells);
    c.scoring_threads = j.value("scoring_threads", c.scoring_threads);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("experiment config: ") + e.what());
  }
}

std::string GridCell::run_id() const {
  std::string id = std::string(method_name(method)) + "-k" + std::to_string(k) + "-" +
                   std::string(ordering_name(ordering));
  if (seed) id += "-s" + std::to_string(*seed);
  return id;
}

std::vector<GridCell> expand_grid(const ExperimentConfig& config) {
  std::vector<GridCell> cells;
  bool zero_shot_added = false;
  const auto add_zero_shot = [&] {
    if (zero_shot_added) return;
    zero_shot_added = true;
    cells.push_back({SelectionMethod::kZeroShot, 0, Ordering::kHighToLow, std::nullopt});
  };
  for (const auto method : config.methods) {
    if (method == SelectionMethod::kZeroShot) {
      add_zero_shot();
      continue;
    }
    for (const auto k : config.k_values) {
      if (k == 0) {
        add_zero_shot();
        continue;
      }
      switch (method) {
        case SelectionMethod::kRandom: {
          const std::size_t reps = std::max<std::size_t>(1, config.random_repetitions);
          for (std::size_t rep = 0; rep < reps; ++rep) {
            cells.push_back({method, k, Ordering::kRandom, config.seed + rep});
          }
          break;
        }
        case SelectionMethod::kKate:
          cells.push_back({method, k,
                           config.kate.nearest_last ? Ordering::kLowToHigh : Ordering::kHighToLow,
                           std::nullopt});
          break;
        default:
          for (const auto ordering : config.orderings) {
            std::optional<std::uint64_t> seed;
            if (ordering == Ordering::kRandom) seed = config.seed;
            cells.push_back({method, k, ordering, seed});
          }
      }
    }
  }
  return cells;
}

std::size_t GridResult::failed() const {
  return static_cast<std::size_t>(std::count_if(
      cells.begin(), cells.end(), [](const auto& c) { return c.error.has_value(); }));
}

GridResult run_experiment(const ExperimentConfig& config, const ExperimentResources& res) {
  config.params.validate();
  config.prompt_template.validate();
  const auto cells = expand_grid(config);

  // Scores and the KATE index are computed once and shared by all cells.
  std::map<SelectionMethod, ScoringOutcome> scoring;
  std::unique_ptr<KateIndex> kate;
  std::string kate_error = "KATE retrieval needs an embedding backend";
  for (const auto& cell : cells) {
    if (cell.k == 0) continue;
    if (cell.method == SelectionMethod::kKate) {
      if (!kate && res.embeddings != nullptr) {
        try {
          kate = std::make_unique<KateIndex>(res.tune, *res.embeddings, config.kate);
        } catch (const std::exception& e) {
          kate_error = e.what();
        }
      }
      continue;
    }
    if (cell.method == SelectionMethod::kRandom || cell.method == SelectionMethod::kZeroShot ||
        scoring.count(cell.method) != 0) {
      continue;
    }
    ScoringOutcome outcome;
    try {
      ScoreOptions options;
      options.embeddings = res.embeddings;
      options.threads = config.scoring_threads;
      outcome.scores = score_pairs(res.tune, method_metric(cell.method), options);
    } catch (const Error& e) {
      outcome.code = e.code();
      outcome.error = e.what();
    }
    scoring.emplace(cell.method, std::move(outcome));
  }

  GridResult grid;
  grid.cells.resize(cells.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      grid.cells[i] = run_cell(cells[i], config, res, scoring, kate.get(), kate_error);
    }
  };
  const std::size_t workers =
      std::min(std::max<std::size_t>(1, config.max_parallel_cells), cells.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  return grid;
}

ordered_json grid_summary_json(const GridResult& grid) {
  auto rows = ordered_json::array();
  for (const auto& c : grid.cells) {
    ordered_json row;
    row["run_id"] = c.cell.run_id();
    row["method"] = method_name(c.cell.method);
    row["k"] = c.cell.k;
    row["ordering"] = ordering_name(c.cell.ordering);
    row["seed"] = c.cell.seed ? ordered_json(*c.cell.seed) : ordered_json(nullptr);
    row["status"] = c.error ? "error" : "ok";
    row["sari"] = c.report ? ordered_json(c.report->sari) : ordered_json(nullptr);
    row["bleu"] = c.report ? ordered_json(c.report->bleu) : ordered_json(nullptr);
    row["error"] = c.error ? ordered_json(*c.error) : ordered_json(nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string grid_csv(const GridResult& grid) {
  std::string out = "run_id,method,k,ordering,seed,sari,bleu,status\n";
  for (const auto& c : grid.cells) {
    out += c.cell.run_id() + "," + std::string(method_name(c.cell.method)) + "," +
           std::to_string(c.cell.k) + "," + std::string(ordering_name(c.cell.ordering)) + "," +
           (c.cell.seed ? std::to_string(*c.cell.seed) : "") + "," +
           (c.report ? format_fixed(c.report->sari, 6) : "") + "," +
           (c.report ? format_fixed(c.report->bleu, 6) : "") + "," +
           (c.error ? "error" : "ok") + "\n";
  }
  return out;
}

std::string grid_table(const GridResult& grid) {
  std::vector<std::array<std::string, 7>> rows;
  rows.push_back({"run_id", "method", "k", "ordering", "seed", "SARI", "BLEU"});
  for (const auto& c : grid.cells) {
    rows.push_back({c.cell.run_id(), std::string(method_name(c.cell.method)),
                    std::to_string(c.cell.k), std::string(ordering_name(c.cell.ordering)),
                    c.cell.seed ? std::to_string(*c.cell.seed) : "-",
                    c.report ? format_fixed(c.report->sari, 2) : "error",
                    c.report ? format_fixed(c.report->bleu, 2) : "error"});
  }
  std::array<std::size_t, 7> width{};
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const bool numeric = i == 2 || i >= 5;
      const std::string pad(width[i] - r[i].size(), ' ');
      if (i > 0) out << "  ";
      if (numeric) {
        out << pad << r[i];
      } else {
        out << r[i] << (i + 1 < r.size() ? pad : "");
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_grid(const GridResult& grid, const ExperimentConfig& config,
                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "reports");
  const auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::kMissingFile, "cannot write " + p.string());
    out << text;
  };
  write(dir / "manifest.json", to_json(config).dump(2) + "\n");
  for (const auto& c : grid.cells) {
    if (c.report) {
      write(dir / "reports" / (c.cell.run_id() + ".json"), to_json(*c.report).dump(2) + "\n");
    }
  }
  write(dir / "grid.json", grid_summary_json(grid).dump(2) + "\n");
  write(dir / "grid.csv", grid_csv(grid));
  write(dir / "grid.txt", grid_table(grid));
}

}  // namespace mbl
