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

#ifndef MBL_PROMPTING_HPP_
#define MBL_PROMPTING_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "mbl/corpus.hpp"
#include "mbl/llm_params.hpp"
#include "mbl/selection.hpp"

namespace mbl {

struct PromptTemplate {
  static constexpr std::string_view kDefaultInstruction = "Simplify the following complex sentences.";

  std::string instruction{kDefaultInstruction};
  std::string example_format = "Complex sentence: {c}\nSimple sentence: {r}";
  std::string query_format = "Complex sentence: {c}\nSimple sentence:";
  std::string separator = "\n\n";

  // Throws kTemplateSlotMissing unless example_format holds {c} and {r}
  // exactly once and query_format holds {c} exactly once.
  void validate() const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

// Template file: instruction, example format and query format separated by
// lines consisting of "---". An optional fourth section is the separator
// (escape sequences \n and \t are expanded). Trailing newlines of each section
// are dropped.
PromptTemplate load_template(const std::filesystem::path& file);
PromptTemplate parse_template(std::string_view text);

nlohmann::json to_json(const PromptTemplate& t);
PromptTemplate template_from_json(const nlohmann::json& j);

struct Prompt {
  std::string text;
  std::size_t k = 0;
  std::string query;  // raw query sentence
  // SHA-256 over (text, model id, generation parameters).
  std::string digest;
};

std::string prompt_digest(std::string_view text, const GenerationParams& params);

// Instruction, examples in ExampleSet order, then the query awaiting its
// simplification, joined by the template separator. An empty instruction is
// omitted. No examples gives a zero-shot prompt.
Prompt build_prompt(const PromptTemplate& tmpl, const ExampleSet& examples, const Sentence& query,
                    const GenerationParams& params = {});

// Trims, cuts at the first "Complex sentence:" marker and keeps the first
// block of non-empty lines, joined with spaces. Throws kEmptyCompletion.
Sentence parse_completion(std::string_view raw);

}  // namespace mbl

#endif  // MBL_PROMPTING_HPP_
