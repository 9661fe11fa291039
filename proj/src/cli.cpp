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

#include "mbl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mbl/corpus.hpp"
#include "mbl/embeddings.hpp"
#include "mbl/evaluation.hpp"
#include "mbl/llm.hpp"
#include "mbl/metrics.hpp"
#include "mbl/prompting.hpp"
#include "mbl/selection.hpp"

namespace mbl {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct GenerationFlags {
  GenerationParams params;
  std::string template_file;

  void add(CLI::App* app) {
    app->add_option("--model", params.model_id, "Model id sent to the backend");
    app->add_option("--temperature", params.temperature);
    app->add_option("--max-tokens", params.max_tokens);
    app->add_option("--top-p", params.top_p);
    app->add_option("--frequency-penalty", params.frequency_penalty);
    app->add_option("--presence-penalty", params.presence_penalty);
    app->add_option("--template", template_file, "Prompt template file");
  }

  PromptTemplate prompt_template() const {
    if (template_file.empty()) return {};
    return load_template(template_file);
  }
};

struct BackendFlags {
  std::string backend = "mock-echo";
  std::string cache;
  std::size_t max_in_flight = 4;
  bool legacy_completions = false;

  void add(CLI::App* app) {
    app->add_option("--backend", backend, "http, mock-echo or mock-first-reference")
        ->check(CLI::IsMember({"http", "mock-echo", "mock-first-reference"}));
    app->add_option("--cache", cache, "Response cache (JSONL); in-memory when absent");
    app->add_option("--max-in-flight", max_in_flight)->check(CLI::PositiveNumber);
    app->add_flag("--legacy-completions", legacy_completions,
                  "Use /v1/completions instead of the chat endpoint");
  }
};

std::unique_ptr<CompletionBackend> make_backend(const std::string& name, const Corpus& test,
                                                bool legacy_completions) {
  switch (parse_backend(name)) {
    case BackendKind::kMockEcho:
      return std::make_unique<MockEchoBackend>();
    case BackendKind::kMockFirstReference:
      return std::make_unique<MockFirstReferenceBackend>(test);
    case BackendKind::kHttp: {
      auto config = HttpBackendConfig::from_env();
      config.legacy_completions = legacy_completions;
      return std::make_unique<HttpCompletionBackend>(config);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown backend " + name);
}

std::unique_ptr<ResponseCache> make_cache(const std::string& path) {
  if (path.empty()) return std::make_unique<ResponseCache>();
  return std::make_unique<ResponseCache>(fs::path(path));
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

// "-" is standard output.
void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kMissingFile, "cannot write " + path);
  f << text;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void print_invocations(std::ostream& err, const Completer& completer) {
  err << "backend invocations: " << completer.backend_invocations() << "\n";
}

// ---- score ----

struct ScoreCmd {
  std::string corpus;
  std::string metric;
  std::string out = "-";
  std::string embeddings;
  unsigned threads = 1;

  void add(CLI::App* app) {
    app->add_option("--corpus", corpus, "Parallel directory or JSONL file")->required();
    app->add_option("--metric", metric, "sari, cr or bertprec")
        ->required()
        ->check(CLI::IsMember({"sari", "cr", "bertprec"}));
    app->add_option("--out", out, "Scored pairs (JSONL); - for stdout");
    app->add_option("--embeddings", embeddings, "test[:dim[:seed]], file:PATH or http:URL");
    app->add_option("--threads", threads)->check(CLI::PositiveNumber);
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    const Corpus c = load_corpus(corpus);
    std::unique_ptr<EmbeddingProvider> provider;
    if (!embeddings.empty()) provider = make_embedding_provider(embeddings);
    ScoreOptions options;
    options.embeddings = provider.get();
    options.threads = threads;
    const PairScores scores = score_pairs(c, parse_metric(metric), options);
    std::ostringstream text;
    write_scored_pairs(scores.pairs, text);
    write_text(out, text.str(), out_stream);
    err << scores.pairs.size() << " pairs scored";
    if (scores.skipped_instances) {
      err << ", " << scores.skipped_instances << " instances with a single reference skipped";
    }
    if (scores.discarded_duplicates) {
      err << ", " << scores.discarded_duplicates << " duplicates discarded";
    }
    err << "\n";
    return kExitOk;
  }
};

// ---- select ----

struct SelectCmd {
  std::string scores;
  std::string corpus;
  std::string method;
  std::size_t k = 0;
  std::string ordering = "high-to-low";
  std::optional<std::uint64_t> seed;
  std::string out = "-";

  void add(CLI::App* app) {
    app->add_option("--scores", scores, "Scored pairs from `mbl score`");
    app->add_option("--corpus", corpus, "Corpus to draw from with --method random");
    app->add_option("--method", method, "random draws from --corpus instead of ranking scores")
        ->check(CLI::IsMember({"random"}));
    app->add_option("--k", k)->required();
    app->add_option("--ordering", ordering)
        ->check(CLI::IsMember({"high-to-low", "low-to-high", "random"}));
    app->add_option("--seed", seed, "Seed for random draws and random ordering");
    app->add_option("--out", out, "Example set (JSON); - for stdout");
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    ExampleSet set;
    if (method == "random") {
      if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "--method random needs --corpus");
      if (!seed) throw Error(ErrorCode::kInvalidArgument, "--method random needs --seed");
      set = random_select(load_corpus(corpus), k, *seed);
    } else {
      if (scores.empty()) throw Error(ErrorCode::kInvalidArgument, "--scores is required");
      const Ordering o = parse_ordering(ordering);
      if (o == Ordering::kRandom && !seed) {
        throw Error(ErrorCode::kInvalidArgument, "random ordering needs --seed");
      }
      if (k < 1) throw Error(ErrorCode::kInvalidArgument, "--k must be at least 1");
      const auto pairs = read_scored_pairs(scores);
      set = order_examples(select_top_k(pairs, k), o, seed.value_or(0));
    }
    write_text(out, to_json(set).dump(2) + "\n", out_stream);
    if (set.truncated) err << "only " << set.pairs.size() << " pairs available for k=" << k << "\n";
    return kExitOk;
  }
};

// ---- build-prompt ----

struct BuildPromptCmd {
  std::string examples;
  std::string query;
  std::string out = "-";
  GenerationFlags gen;

  void add(CLI::App* app) {
    app->add_option("--examples", examples, "Example set; zero-shot when absent");
    app->add_option("--query", query, "Complex sentence to simplify")->required();
    app->add_option("--out", out, "Prompt text; - for stdout");
    gen.add(app);
  }

  int run(std::ostream& out_stream, std::ostream&) const {
    ExampleSet set;
    if (!examples.empty()) set = example_set_from_json(read_json_file(examples));
    const Prompt p = build_prompt(gen.prompt_template(), set, Sentence::from_raw(query), gen.params);
    write_text(out, p.text + "\n", out_stream);
    return kExitOk;
  }
};

// ---- run ----

struct RunCmd {
  std::string test;
  std::string examples;
  std::string tune;
  std::string method = "sari";
  std::size_t k = 0;
  std::string ordering = "high-to-low";
  std::optional<std::uint64_t> seed;
  std::string embeddings;
  int bleu_order = 4;
  std::string report = "-";
  GenerationFlags gen;
  BackendFlags backend;

  void add(CLI::App* app) {
    app->add_option("--test", test, "Test corpus")->required();
    app->add_option("--examples", examples, "Fixed example set for every prompt");
    app->add_option("--tune", tune, "Corpus to select examples from");
    app->add_option("--method", method, "sari, cr, bertprec, random, kate or zero-shot")
        ->check(CLI::IsMember({"sari", "cr", "bertprec", "random", "kate", "zero-shot"}));
    app->add_option("--k", k, "Number of examples (0 for zero-shot)");
    app->add_option("--ordering", ordering)
        ->check(CLI::IsMember({"high-to-low", "low-to-high", "random"}));
    app->add_option("--seed", seed);
    app->add_option("--embeddings", embeddings);
    app->add_option("--bleu-order", bleu_order)->check(CLI::Range(1, 9));
    app->add_option("--report", report, "Report JSON; - for stdout");
    gen.add(app);
    backend.add(app);
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    const Corpus test_corpus = load_corpus(test);
    auto be = make_backend(backend.backend, test_corpus, backend.legacy_completions);
    auto cache = make_cache(backend.cache);
    Completer completer(*be, *cache);

    ExperimentConfig config;
    config.tune_path = tune;
    config.test_path = test;
    config.prompt_template = gen.prompt_template();
    config.params = gen.params;
    config.bleu_order = bleu_order;
    config.backend = backend.backend;
    config.embeddings = embeddings;
    config.max_in_flight = backend.max_in_flight;
    config.seed = seed.value_or(0);

    EvalReport result;
    if (!examples.empty()) {
      result = run_fixed(config, test_corpus, completer);
    } else {
      const SelectionMethod m = parse_method(method);
      const Ordering o = parse_ordering(ordering);
      const bool needs_tune = k > 0 && m != SelectionMethod::kZeroShot;
      if (needs_tune && tune.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "--tune or --examples is required when k > 0");
      }
      if ((m == SelectionMethod::kRandom || o == Ordering::kRandom) && needs_tune && !seed) {
        throw Error(ErrorCode::kInvalidArgument, "random selection or ordering needs --seed");
      }
      config.methods = {m};
      config.k_values = {k};
      config.orderings = {o};
      config.random_repetitions = 1;
      const Corpus tune_corpus = needs_tune ? load_corpus(tune) : Corpus{};
      std::unique_ptr<EmbeddingProvider> provider;
      if (!embeddings.empty()) provider = make_embedding_provider(embeddings);
      const GridResult grid =
          run_experiment(config, {tune_corpus, test_corpus, completer, provider.get()});
      const CellResult& cell = grid.cells.at(0);
      if (cell.error) {
        err << "mbl: " << *cell.error << "\n";
        print_invocations(err, completer);
        return exit_code(cell.error_category);
      }
      result = *cell.report;
    }
    write_text(report, to_json(result).dump(2) + "\n", out_stream);
    err << "SARI " << fixed(result.sari) << "  BLEU-" << result.bleu_order << " "
        << fixed(result.bleu) << "\n";
    print_invocations(err, completer);
    return kExitOk;
  }

  EvalReport run_fixed(const ExperimentConfig& config, const Corpus& test_corpus,
                       Completer& completer) const {
    const ExampleSet set = example_set_from_json(read_json_file(examples));
    std::vector<Prompt> prompts;
    for (const auto& inst : test_corpus.instances) {
      prompts.push_back(build_prompt(config.prompt_template, set, inst.source, config.params));
    }
    const auto items = completer.batch_complete(prompts, config.params, config.max_in_flight);
    std::vector<Sentence> predictions;
    for (const auto& item : items) {
      if (!item.ok()) throw *item.error;
      predictions.push_back(parse_completion(item.record->completion_text));
    }
    EvalReport r = evaluate(test_corpus, predictions, config.bleu_order);
    r.run_id = "examples-k" + std::to_string(set.pairs.size());
    nlohmann::ordered_json m;
    m["run_id"] = r.run_id;
    m["examples_file"] = examples;
    m["example_set"] = to_json(set);
    m["config"] = to_json(config);
    r.manifest = std::move(m);
    return r;
  }
};

// ---- evaluate ----

struct EvaluateCmd {
  std::string test;
  std::string predictions;
  int bleu_order = 4;
  std::string report;

  void add(CLI::App* app) {
    app->add_option("--test", test, "Test corpus")->required();
    app->add_option("--predictions", predictions, "One prediction per line")->required();
    app->add_option("--bleu-order", bleu_order)->check(CLI::Range(1, 9));
    app->add_option("--report", report, "Report JSON; - for stdout");
  }

  int run(std::ostream& out_stream, std::ostream&) const {
    const Corpus test_corpus = load_corpus(test);
    std::ifstream in(predictions, std::ios::binary);
    if (!in) throw Error(ErrorCode::kMissingFile, predictions);
    std::vector<Sentence> preds;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      try {
        preds.push_back(Sentence::from_raw(line));
      } catch (const Error&) {
        throw Error(ErrorCode::kEmptyLine, predictions + ":" + std::to_string(n));
      }
    }
    EvalReport r = evaluate(test_corpus, preds, bleu_order);
    r.run_id = "evaluate";
    r.manifest = {{"test", test}, {"predictions", predictions}, {"bleu_order", bleu_order}};
    if (!report.empty()) write_text(report, to_json(r).dump(2) + "\n", out_stream);
    if (report != "-") {
      out_stream << "SARI " << fixed(r.sari) << "\nBLEU-" << bleu_order << " " << fixed(r.bleu)
                 << "\n";
    }
    return kExitOk;
  }
};

// ---- grid ----

struct GridCmd {
  std::string manifest;
  std::string tune;
  std::string test;
  std::vector<std::string> methods{"sari"};
  std::vector<std::size_t> k_values{kDefaultKValues.begin(), kDefaultKValues.end()};
  std::vector<std::string> orderings{"high-to-low"};
  std::optional<std::uint64_t> seed;
  std::size_t repetitions = 3;
  std::string embeddings;
  std::size_t kate_reference = 0;
  bool kate_nearest_first = false;
  int bleu_order = 4;
  std::size_t parallel_cells = 1;
  unsigned scoring_threads = 1;
  std::string out;
  GenerationFlags gen;
  BackendFlags backend;

  void add(CLI::App* app) {
    app->add_option("--manifest", manifest, "Replay the configuration stored in a grid manifest");
    app->add_option("--tune", tune, "Corpus examples are selected from");
    app->add_option("--test", test, "Corpus prompts are evaluated on");
    app->add_option("--methods", methods, "sari, cr, bertprec, random, kate, zero-shot")
        ->delimiter(',')
        ->check(CLI::IsMember({"sari", "cr", "bertprec", "random", "kate", "zero-shot"}));
    app->add_option("--k", k_values, "k values, comma separated")->delimiter(',');
    app->add_option("--orderings", orderings)
        ->delimiter(',')
        ->check(CLI::IsMember({"high-to-low", "low-to-high", "random"}));
    app->add_option("--seed", seed, "Base seed for every random choice (required)");
    app->add_option("--repetitions", repetitions, "Seeds per k for the random baseline")
        ->check(CLI::PositiveNumber);
    app->add_option("--embeddings", embeddings);
    app->add_option("--kate-reference", kate_reference, "Reference shown for KATE examples");
    app->add_flag("--kate-nearest-first", kate_nearest_first);
    app->add_option("--bleu-order", bleu_order)->check(CLI::Range(1, 9));
    app->add_option("--parallel-cells", parallel_cells)->check(CLI::PositiveNumber);
    app->add_option("--scoring-threads", scoring_threads)->check(CLI::PositiveNumber);
    app->add_option("--out", out, "Output directory")->required();
    gen.add(app);
    backend.add(app);
  }

  ExperimentConfig config() const {
    if (!manifest.empty()) {
      json j = read_json_file(manifest);
      // A report manifest nests the grid configuration.
      if (j.contains("manifest")) j = j["manifest"];
      if (j.contains("config")) j = j["config"];
      return experiment_config_from_json(j);
    }
    if (tune.empty() || test.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--tune and --test are required without --manifest");
    }
    if (!seed) throw Error(ErrorCode::kInvalidArgument, "grid mode requires --seed");
    ExperimentConfig c;
    c.tune_path = tune;
    c.test_path = test;
    c.methods.clear();
    for (const auto& m : methods) c.methods.push_back(parse_method(m));
    c.k_values = k_values;
    c.orderings.clear();
    for (const auto& o : orderings) c.orderings.push_back(parse_ordering(o));
    c.seed = *seed;
    c.random_repetitions = repetitions;
    c.prompt_template = gen.prompt_template();
    c.params = gen.params;
    c.bleu_order = bleu_order;
    c.backend = backend.backend;
    c.embeddings = embeddings;
    c.kate.reference_index = kate_reference;
    c.kate.nearest_last = !kate_nearest_first;
    c.max_in_flight = backend.max_in_flight;
    c.max_parallel_cells = parallel_cells;
    c.scoring_threads = scoring_threads;
    return c;
  }

  int run(std::ostream& out_stream, std::ostream& err) const {
    const ExperimentConfig c = config();
    const Corpus tune_corpus = load_corpus(c.tune_path);
    const Corpus test_corpus = load_corpus(c.test_path);
    auto be = make_backend(c.backend, test_corpus, backend.legacy_completions);
    auto cache = make_cache(backend.cache);
    Completer completer(*be, *cache);
    std::unique_ptr<EmbeddingProvider> provider;
    if (!c.embeddings.empty()) provider = make_embedding_provider(c.embeddings);

    const GridResult grid =
        run_experiment(c, {tune_corpus, test_corpus, completer, provider.get()});
    write_grid(grid, c, out);
    out_stream << grid_table(grid);
    print_invocations(err, completer);
    for (const auto& cell : grid.cells) {
      if (cell.error) err << "mbl: " << cell.cell.run_id() << ": " << *cell.error << "\n";
    }
    if (grid.failed() == 0) return kExitOk;
    for (const auto& cell : grid.cells) {
      if (cell.error) return exit_code(cell.error_category);
    }
    return kExitData;
  }
};

}  // namespace

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage:
      return kExitUsage;
    case ErrorCategory::kData:
      return kExitData;
    case ErrorCategory::kBackend:
      return kExitBackend;
  }
  return kExitData;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metric-based in-context example selection for sentence simplification", "mbl"};
  app.require_subcommand(1);

  ScoreCmd score;
  SelectCmd select;
  BuildPromptCmd build_prompt_cmd;
  RunCmd run;
  EvaluateCmd evaluate_cmd;
  GridCmd grid;
  score.add(app.add_subcommand("score", "Score every (complex, reference) pair of a corpus"));
  select.add(app.add_subcommand("select", "Pick and order k examples"));
  build_prompt_cmd.add(app.add_subcommand("build-prompt", "Render one prompt"));
  run.add(app.add_subcommand("run", "Select, prompt, complete and evaluate one configuration"));
  evaluate_cmd.add(app.add_subcommand("evaluate", "Score predictions against a test corpus"));
  grid.add(app.add_subcommand("grid", "Run a grid of selection settings"));

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mbl: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "score") return score.run(out, err);
    if (name == "select") return select.run(out, err);
    if (name == "build-prompt") return build_prompt_cmd.run(out, err);
    if (name == "run") return run.run(out, err);
    if (name == "evaluate") return evaluate_cmd.run(out, err);
    return grid.run(out, err);
  } catch (const Error& e) {
    err << "mbl: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "mbl: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace mbl
