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

#include "mbl/prompting.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "mbl/digest.hpp"
#include "mbl/error.hpp"

namespace mbl {
namespace {

constexpr std::string_view kComplexMarker = "Complex sentence:";

std::size_t occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string fill(std::string_view format, std::string_view slot, std::string_view value) {
  std::string out(format);
  const auto pos = out.find(slot);
  if (pos != std::string::npos) out.replace(pos, slot.size(), value);
  return out;
}

std::string expand_escapes(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == 'n') { out += '\n'; ++i; continue; }
      if (s[i + 1] == 't') { out += '\t'; ++i; continue; }
      if (s[i + 1] == '\\') { out += '\\'; ++i; continue; }
    }
    out += s[i];
  }
  return out;
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\v\f") == std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\v\f");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\v\f");
  return s.substr(b, e - b + 1);
}

}  // namespace

void PromptTemplate::validate() const {
  if (occurrences(example_format, "{c}") != 1 || occurrences(example_format, "{r}") != 1) {
    throw Error(ErrorCode::kTemplateSlotMissing, "example format needs {c} and {r} exactly once");
  }
  if (occurrences(query_format, "{c}") != 1) {
    throw Error(ErrorCode::kTemplateSlotMissing, "query format needs {c} exactly once");
  }
}

PromptTemplate parse_template(std::string_view text) {
  std::vector<std::string> sections(1);
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "---") {
      sections.emplace_back();
      continue;
    }
    sections.back() += line;
    sections.back() += '\n';
  }
  for (auto& s : sections) {
    while (!s.empty() && s.back() == '\n') s.pop_back();
  }
  if (sections.size() < 3 || sections.size() > 4) {
    throw Error(ErrorCode::kTemplateSlotMissing,
                "template needs 3 or 4 sections separated by '---', found " +
                    std::to_string(sections.size()));
  }
  PromptTemplate t;
  t.instruction = sections[0];
  t.example_format = sections[1];
  t.query_format = sections[2];
  if (sections.size() == 4) t.separator = expand_escapes(sections[3]);
  t.validate();
  return t;
}

PromptTemplate load_template(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_template(ss.str());
}

nlohmann::json to_json(const PromptTemplate& t) {
  return {{"instruction", t.instruction},
          {"example_format", t.example_format},
          {"query_format", t.query_format},
          {"separator", t.separator}};
}

PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  t.instruction = j.value("instruction", t.instruction);
  t.example_format = j.value("example_format", t.example_format);
  t.query_format = j.value("query_format", t.query_format);
  t.separator = j.value("separator", t.separator);
  t.validate();
  return t;
}

std::string prompt_digest(std::string_view text, const GenerationParams& params) {
  nlohmann::ordered_json j;
  j["text"] = text;
  j["params"] = to_json(params);
  return sha256_hex(j.dump());
}

Prompt build_prompt(const PromptTemplate& tmpl, const ExampleSet& examples, const Sentence& query,
                    const GenerationParams& params) {
  tmpl.validate();
  std::vector<std::string> blocks;
  if (!tmpl.instruction.empty()) blocks.push_back(tmpl.instruction);
  for (const auto& pair : examples.pairs) {
    blocks.push_back(fill(fill(tmpl.example_format, "{c}", pair.source.raw()), "{r}", pair.simple.raw()));
  }
  blocks.push_back(fill(tmpl.query_format, "{c}", query.raw()));

  Prompt p;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) p.text += tmpl.separator;
    p.text += blocks[i];
  }
  p.k = examples.pairs.size();
  p.query = query.raw();
  p.digest = prompt_digest(p.text, params);
  return p;
}

Sentence parse_completion(std::string_view raw) {
  std::string_view text = raw;
  if (const auto cut = text.find(kComplexMarker); cut != std::string_view::npos) {
    text = text.substr(0, cut);
  }
  text = trim(text);
  // First group of consecutive non-blank lines, joined into one line.
  std::string kept;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    if (blank(line)) break;
    if (!kept.empty()) kept += ' ';
    kept += trim(line);
    start = end + 1;
  }
  const auto result = trim(kept);
  if (result.empty()) throw Error(ErrorCode::kEmptyCompletion, "model returned no text");
  return Sentence::from_raw(std::string(result));
}

}  // namespace mbl
