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

#include <atomic>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mbl/corpus.hpp"
#include "mbl/embeddings.hpp"
#include "mbl/error.hpp"
#include "mbl/evaluation.hpp"
#include "mbl/llm.hpp"
#include "mbl/metrics.hpp"
#include "test_util.hpp"

namespace mbl {
namespace {

using test::TempDir;

Corpus echo10() { return load_parallel(test::data_dir() / "echo10"); }
Corpus tune() { return load_corpus(test::data_dir() / "tune" / "tune.jsonl"); }

ExperimentConfig base_config() {
  ExperimentConfig c;
  c.tune_path = (test::data_dir() / "tune" / "tune.jsonl").string();
  c.test_path = (test::data_dir() / "echo10").string();
  c.seed = 1;
  return c;
}

std::vector<Sentence> sources(const Corpus& c) {
  std::vector<Sentence> out;
  for (const auto& inst : c.instances) out.push_back(inst.source);
  return out;
}

// Appends a running call number, so regenerated outputs differ.
class CountingBackend final : public CompletionBackend {
 public:
  std::string complete(const Prompt& prompt, const GenerationParams&) override {
    return prompt.query + " v" + std::to_string(++n_);
  }
  BackendKind kind() const override { return BackendKind::kMockEcho; }

 private:
  std::atomic<int> n_{0};
};

TEST_CASE("evaluate an echo run against the frozen oracle values") {
  const Corpus test = echo10();
  const auto expected = test::read_json(test::data_dir() / "echo10" / "expected.json");
  const auto r = evaluate(test, sources(test));
  CHECK(r.sari == doctest::Approx(expected["echo"]["sari"].get<double>()).epsilon(1e-9));
  CHECK(r.bleu == doctest::Approx(expected["echo"]["bleu4"].get<double>()).epsilon(1e-9));
  REQUIRE(r.per_sentence.size() == 10);
  double sum = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(r.per_sentence[i].sari ==
          doctest::Approx(expected["echo"]["sari_per_sentence"][i].get<double>()).epsilon(1e-9));
    sum += r.per_sentence[i].sari;
  }
  CHECK(std::abs(r.sari - sum / 10) < 1e-9);

  const auto five = evaluate(test, sources(test), 5);
  CHECK(five.bleu == doctest::Approx(expected["echo"]["bleu5"].get<double>()).epsilon(1e-9));
  CHECK(five.bleu_order == 5);
}

TEST_CASE("evaluate: first references give BLEU 100") {
  const Corpus test = echo10();
  std::vector<Sentence> preds;
  for (const auto& inst : test.instances) preds.push_back(inst.references[0]);
  CHECK(std::abs(evaluate(test, preds).bleu - 100.0) < 1e-9);
  preds.pop_back();
  try {
    evaluate(test, preds);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLengthMismatch);
  }
}

TEST_CASE("report JSON round trip") {
  const Corpus test = echo10();
  auto r = evaluate(test, sources(test));
  r.run_id = "x";
  r.manifest = {{"k", 2}};
  const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.run_id == "x");
  CHECK(back.sari == r.sari);
  CHECK(back.bleu == r.bleu);
  CHECK(back.per_sentence == r.per_sentence);
  CHECK(back.manifest == r.manifest);
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig c = base_config();
  c.methods = {SelectionMethod::kSari, SelectionMethod::kRandom, SelectionMethod::kKate};
  c.k_values = {0, 3};
  c.orderings = {Ordering::kRandom, Ordering::kLowToHigh};
  c.seed = 99;
  c.prompt_template.instruction = "Rewrite simply.";
  c.params.temperature = 0.0;
  c.bleu_order = 5;
  c.embeddings = "test:8";
  c.kate = {2, false};
  c.max_parallel_cells = 3;
  const auto back = experiment_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(back == c);
  CHECK_FALSE(back == base_config());
  CHECK(experiment_config_from_json(nlohmann::json::object()) == ExperimentConfig{});
  CHECK_THROWS_AS(experiment_config_from_json(nlohmann::json{{"methods", {"fkgl"}}}), Error);
}

TEST_CASE("grid expansion") {
  ExperimentConfig c = base_config();
  CHECK(expand_grid(c).size() == 8);

  c.k_values = {6, 8, 10, 15};
  c.orderings = {Ordering::kHighToLow, Ordering::kLowToHigh, Ordering::kRandom};
  const auto cells = expand_grid(c);
  CHECK(cells.size() == 12);
  std::set<std::string> ids;
  for (const auto& cell : cells) ids.insert(cell.run_id());
  CHECK(ids.size() == 12);
  CHECK(ids.count("sari-k6-random-s1") == 1);
  CHECK(ids.count("sari-k15-low-to-high") == 1);

  c.methods = {SelectionMethod::kRandom};
  c.k_values = {2, 4};
  c.random_repetitions = 3;
  const auto random = expand_grid(c);
  CHECK(random.size() == 6);
  CHECK(random[2].seed == 3u);

  c.methods = {SelectionMethod::kSari, SelectionMethod::kZeroShot};
  c.k_values = {0, 1};
  c.orderings = {Ordering::kHighToLow};
  const auto zero = expand_grid(c);
  CHECK(zero.size() == 2);
  CHECK(zero[0].k == 0);
  CHECK(zero[0].method == SelectionMethod::kZeroShot);
}

TEST_CASE("default grid on mock-echo emits eight reports") {
  const Corpus t = tune(), test = echo10();
  MockEchoBackend backend;
  ResponseCache cache;
  Completer completer(backend, cache);
  const auto grid = run_experiment(base_config(), {t, test, completer, nullptr});
  REQUIRE(grid.cells.size() == 8);
  CHECK(grid.failed() == 0);
  const auto expected = test::read_json(test::data_dir() / "echo10" / "expected.json");
  for (const auto& cell : grid.cells) {
    REQUIRE(cell.report);
    CHECK(cell.report->sari == doctest::Approx(expected["echo"]["sari"].get<double>()).epsilon(1e-9));
    CHECK(cell.report->manifest["k"] == cell.cell.k);
    CHECK(cell.report->manifest["examples"].size() == std::min<std::size_t>(cell.cell.k, 36));
    CHECK(cell.report->manifest["config"]["seed"] == 1);
  }
  CHECK(completer.backend_invocations() == 80);
}

TEST_CASE("out-of-domain selection only uses tune ids") {
  const Corpus t = tune(), test = echo10();
  std::set<std::string> tune_ids, test_ids;
  for (const auto& inst : t.instances) tune_ids.insert(inst.id);
  for (const auto& inst : test.instances) test_ids.insert(inst.id);

  MockEchoBackend backend;
  ResponseCache cache;
  Completer completer(backend, cache);
  const HashEmbeddingProvider emb;
  ExperimentConfig c = base_config();
  c.methods = {SelectionMethod::kSari, SelectionMethod::kCompressionRatio, SelectionMethod::kBertPrecision,
               SelectionMethod::kRandom, SelectionMethod::kKate};
  c.k_values = {2, 6};
  c.max_parallel_cells = 3;
  const auto grid = run_experiment(c, {t, test, completer, &emb});
  CHECK(grid.failed() == 0);
  for (const auto& cell : grid.cells) {
    CHECK_FALSE(cell.example_ids.empty());
    for (const auto& id : cell.example_ids) {
      CHECK(tune_ids.count(id) == 1);
      CHECK(test_ids.count(id) == 0);
    }
  }
}

TEST_CASE("a failing cell leaves its siblings intact") {
  const Corpus t = tune(), test = echo10();
  MockEchoBackend backend;
  ResponseCache cache;
  Completer completer(backend, cache);
  ExperimentConfig c = base_config();
  c.methods = {SelectionMethod::kBertPrecision, SelectionMethod::kSari};
  c.k_values = {1, 2};
  const auto grid = run_experiment(c, {t, test, completer, nullptr});
  REQUIRE(grid.cells.size() == 4);
  CHECK(grid.failed() == 2);
  CHECK(grid.cells[0].error);
  CHECK(grid.cells[0].error_category == ErrorCategory::kUsage);
  CHECK(grid.cells[2].report);
  CHECK(grid.cells[3].report);
}

TEST_CASE("replay from a warm cache is byte-identical") {
  TempDir dir;
  const Corpus t = tune(), test = echo10();
  ExperimentConfig c = base_config();
  c.k_values = {1, 4};
  c.orderings = {Ordering::kHighToLow, Ordering::kRandom};
  c.methods = {SelectionMethod::kSari, SelectionMethod::kRandom};
  c.max_parallel_cells = 2;
  const auto run = [&](const std::filesystem::path& out) {
    CountingBackend backend;
    ResponseCache cache(dir / "cache.jsonl");
    Completer completer(backend, cache);
    write_grid(run_experiment(c, {t, test, completer, nullptr}), c, out);
    return completer.backend_invocations();
  };
  CHECK(run(dir / "a") > 0);
  CHECK(run(dir / "b") == 0);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir / "a");
    CHECK(test::read_file(entry.path()) == test::read_file(dir / "b" / rel));
  }
  CHECK(std::filesystem::exists(dir / "a" / "grid.csv"));
  CHECK(std::filesystem::exists(dir / "a" / "reports" / "sari-k4-random-s1.json"));
  CHECK(experiment_config_from_json(test::read_json(dir / "a" / "manifest.json")) == c);
}

TEST_CASE("dropping one cell's generations changes only that cell") {
  TempDir dir;
  const Corpus t = tune(), test = echo10();
  ExperimentConfig c = base_config();
  c.k_values = {1, 2, 4};
  const auto run = [&](const std::filesystem::path& out) {
    CountingBackend backend;
    ResponseCache cache(dir / "cache.jsonl");
    Completer completer(backend, cache);
    write_grid(run_experiment(c, {t, test, completer, nullptr}), c, out);
    return completer.backend_invocations();
  };
  CHECK(run(dir / "a") == 30);

  // Remove the k = 2 prompts (three "Complex sentence:" markers).
  std::istringstream in(test::read_file(dir / "cache.jsonl"));
  std::string line, kept;
  while (std::getline(in, line)) {
    const auto prompt = nlohmann::json::parse(line)["prompt"].get<std::string>();
    std::size_t markers = 0;
    for (auto p = prompt.find("Complex sentence:"); p != std::string::npos;
         p = prompt.find("Complex sentence:", p + 1)) {
      ++markers;
    }
    if (markers != 3) kept += line + "\n";
  }
  test::write_file(dir / "cache.jsonl", kept);

  CHECK(run(dir / "b") == 10);
  const auto report = [&](const char* d, const char* id) {
    return test::read_file(dir / d / "reports" / (std::string(id) + ".json"));
  };
  CHECK(report("a", "sari-k1-high-to-low") == report("b", "sari-k1-high-to-low"));
  CHECK(report("a", "sari-k4-high-to-low") == report("b", "sari-k4-high-to-low"));
  CHECK(report("a", "sari-k2-high-to-low") != report("b", "sari-k2-high-to-low"));
}

TEST_CASE("grid table and csv") {
  const Corpus t = tune(), test = echo10();
  MockEchoBackend backend;
  ResponseCache cache;
  Completer completer(backend, cache);
  ExperimentConfig c = base_config();
  c.k_values = {0, 2};
  const auto grid = run_experiment(c, {t, test, completer, nullptr});
  const std::string csv = grid_csv(grid);
  CHECK(csv.rfind("run_id,method,k,ordering,seed,sari,bleu,status\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const std::string table = grid_table(grid);
  CHECK(table.find("zero-shot") != std::string::npos);
  CHECK(grid_summary_json(grid).size() == 2);
}

}  // namespace
}  // namespace mbl
