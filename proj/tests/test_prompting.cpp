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

#include <string>

#include "doctest.h"
#include "mbl/corpus.hpp"
#include "mbl/error.hpp"
#include "mbl/llm_params.hpp"
#include "mbl/prompting.hpp"
#include "mbl/selection.hpp"
#include "test_util.hpp"

namespace mbl {
namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

ExampleSet examples(std::size_t k) {
  ExampleSet set;
  set.k = k;
  for (std::size_t i = 0; i < k; ++i) {
    ScoredPair p;
    p.instance_id = std::to_string(i);
    p.source = Sentence::from_raw("Complex number " + std::to_string(i) + ".");
    p.simple = Sentence::from_raw("Simple " + std::to_string(i) + ".");
    p.score = 1.0 / double(i + 1);
    set.pairs.push_back(p);
  }
  return set;
}

TEST_CASE("default generation parameters") {
  const GenerationParams p;
  CHECK(p.temperature == 0.7);
  CHECK(p.max_tokens == 256);
  CHECK(p.top_p == 1.0);
  CHECK(p.frequency_penalty == 0.0);
  CHECK(p.presence_penalty == 0.0);
  CHECK(p.model_id == "text-davinci-003");
  CHECK_NOTHROW(p.validate());
  GenerationParams bad = p;
  bad.top_p = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.max_tokens = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(params_from_json(to_json(p)) == p);
  CHECK(to_json(p).dump() ==
        R"({"model":"text-davinci-003","temperature":0.7,"max_tokens":256,"top_p":1.0,)"
        R"("frequency_penalty":0.0,"presence_penalty":0.0})");
}

TEST_CASE("prompt has one marker per example plus the query") {
  const PromptTemplate tmpl;
  const auto query = Sentence::from_raw("The query sentence is rather long.");
  for (std::size_t k : {0, 1, 2, 4, 6, 8, 10, 15, 20}) {
    const Prompt p = build_prompt(tmpl, examples(k), query);
    CHECK(count(p.text, "Complex sentence:") == k + 1);
    CHECK(count(p.text, "Simple sentence:") == k + 1);
    CHECK(p.k == k);
    CHECK(p.query == query.raw());
  }
}

TEST_CASE("prompt layout") {
  const Prompt p = build_prompt(PromptTemplate{}, examples(2), Sentence::from_raw("Query here."));
  CHECK(p.text ==
        "Simplify the following complex sentences.\n\n"
        "Complex sentence: Complex number 0.\nSimple sentence: Simple 0.\n\n"
        "Complex sentence: Complex number 1.\nSimple sentence: Simple 1.\n\n"
        "Complex sentence: Query here.\nSimple sentence:");

  PromptTemplate bare;
  bare.instruction = "";
  const Prompt z = build_prompt(bare, ExampleSet{}, Sentence::from_raw("Query here."));
  CHECK(z.text == "Complex sentence: Query here.\nSimple sentence:");
}

TEST_CASE("digest covers text and parameters") {
  const auto q = Sentence::from_raw("Query.");
  const Prompt a = build_prompt(PromptTemplate{}, examples(1), q);
  const Prompt b = build_prompt(PromptTemplate{}, examples(1), q);
  CHECK(a.digest == b.digest);
  CHECK(a.digest.size() == 64);
  GenerationParams hot;
  hot.temperature = 1.0;
  CHECK(build_prompt(PromptTemplate{}, examples(1), q, hot).digest != a.digest);
  CHECK(build_prompt(PromptTemplate{}, examples(2), q).digest != a.digest);
  CHECK(prompt_digest(a.text, GenerationParams{}) == a.digest);
}

TEST_CASE("template files") {
  const auto t = parse_template("Make it simple.\n---\nIN: {c}\nOUT: {r}\n---\nIN: {c}\nOUT:\n---\n\\n--\\n\n");
  CHECK(t.instruction == "Make it simple.");
  CHECK(t.example_format == "IN: {c}\nOUT: {r}");
  CHECK(t.query_format == "IN: {c}\nOUT:");
  CHECK(t.separator == "\n--\n");
  CHECK(template_from_json(to_json(t)) == t);

  const auto three = parse_template("\n---\nA {c} B {r}\n---\nA {c} B\n");
  CHECK(three.instruction.empty());
  CHECK(three.separator == "\n\n");

  try {
    parse_template("x\n---\nA {c}\n---\nA {c}\n");
    FAIL("expected TemplateSlotMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTemplateSlotMissing);
  }
  CHECK_THROWS_AS(parse_template("only one section"), Error);
  CHECK_THROWS_AS(parse_template("x\n---\n{c} {r}\n---\nno slot\n"), Error);

  test::TempDir dir;
  test::write_file(dir / "t.txt", "Inst.\n---\nC: {c}\nS: {r}\n---\nC: {c}\nS:\n");
  CHECK(load_template(dir / "t.txt").instruction == "Inst.");
  CHECK_THROWS_AS(load_template(dir / "missing.txt"), Error);
}

TEST_CASE("completion parsing") {
  CHECK(parse_completion(" The cat sat.\n").raw() == "The cat sat.");
  CHECK(parse_completion("The cat sat.\n\nComplex sentence: next one").raw() == "The cat sat.");
  CHECK(parse_completion("The cat sat.\nComplex sentence: next one").raw() == "The cat sat.");
  CHECK(parse_completion("Line one\n  line two\n\nignored").raw() == "Line one line two");
  CHECK(parse_completion("\n\n  Leading blank lines.").raw() == "Leading blank lines.");
  for (const char* empty : {"", "   \n\t", "Complex sentence: something"}) {
    try {
      parse_completion(empty);
      FAIL("expected EmptyCompletion");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyCompletion);
    }
  }
}

}  // namespace
}  // namespace mbl
