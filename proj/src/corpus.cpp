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

#include "mbl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "mbl/error.hpp"
#include "json.hpp"

namespace mbl {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// The 13a punctuation class: { | } ~ [ \ ] ^ _ ` space ! " # $ % & ( ) * + : ;
// < = > ? @ /
bool is_13a_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '{' && u <= '~') || (u >= '[' && u <= '`') ||
         (u >= ' ' && u <= '&') || (u >= '(' && u <= '+') ||
         (u >= ':' && u <= '@') || u == '/';
}

// ASCII plus the Latin-1 capitals U+00C0..U+00DE (except U+00D7).
std::string lowercase(std::string_view in) {
  std::string out(in);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto u = static_cast<unsigned char>(out[i]);
    if (u >= 'A' && u <= 'Z') {
      out[i] = static_cast<char>(u + 32);
    } else if (u == 0xC3 && i + 1 < out.size()) {
      const auto next = static_cast<unsigned char>(out[i + 1]);
      if (next >= 0x80 && next <= 0x9E && next != 0x97) {
        out[i + 1] = static_cast<char>(next + 0x20);
      }
      ++i;
    }
  }
  return out;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Left-to-right, non-overlapping rewrite of every two-character match
// (first, second) into "<lead><first><mid><second><tail>".
template <typename First, typename Second>
std::string rewrite_pairs(const std::string& s, First first, Second second,
                          std::string_view lead, std::string_view mid,
                          std::string_view tail) {
  std::string out;
  out.reserve(s.size() + s.size() / 2);
  std::size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
      out += lead;
      out += s[i];
      out += mid;
      out += s[i + 1];
      out += tail;
      i += 2;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool read_lines(const std::filesystem::path& file,
                std::vector<std::string>& lines) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw) {
  std::string line = lowercase(raw);
  replace_all(line, "<skipped>", "");
  replace_all(line, "-\n", "");
  replace_all(line, "\n", " ");
  if (line.find('&') != std::string::npos) {
    replace_all(line, "&quot;", "\"");
    replace_all(line, "&amp;", "&");
    replace_all(line, "&lt;", "<");
    replace_all(line, "&gt;", ">");
  }
  line = " " + line + " ";

  std::string spaced;
  spaced.reserve(line.size() * 2);
  for (char c : line) {
    if (is_13a_punct(c)) {
      spaced += ' ';
      spaced += c;
      spaced += ' ';
    } else {
      spaced += c;
    }
  }
  const auto non_digit = [](char c) { return !is_digit(c); };
  const auto period_or_comma = [](char c) { return c == '.' || c == ','; };
  spaced = rewrite_pairs(spaced, non_digit, period_or_comma, "", " ", " ");
  spaced = rewrite_pairs(spaced, period_or_comma, non_digit, " ", " ", "");
  spaced = rewrite_pairs(spaced, is_digit, [](char c) { return c == '-'; }, "",
                         " ", " ");

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < spaced.size()) {
    while (i < spaced.size() && is_space(spaced[i])) ++i;
    std::size_t j = i;
    while (j < spaced.size() && !is_space(spaced[j])) ++j;
    if (j > i) tokens.emplace_back(spaced.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::size_t char_count(std::string_view utf8) {
  std::size_t n = 0;
  for (char c : utf8) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

Sentence Sentence::from_raw(std::string raw) {
  if (trim(raw).empty()) {
    throw Error(ErrorCode::kEmptySentence, "sentence is blank");
  }
  Sentence s;
  s.tokens_ = tokenize(raw);
  s.raw_ = std::move(raw);
  return s;
}

std::string_view split_name(Split split) {
  return split == Split::kTest ? "test" : "validation";
}

Split parse_split(std::string_view name) {
  if (name == "test") return Split::kTest;
  if (name == "validation" || name == "valid" || name == "dev") {
    return Split::kValidation;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown split '" + std::string(name) + "'");
}

bool Corpus::ragged() const {
  for (const auto& inst : instances) {
    if (inst.references.size() != instances.front().references.size()) {
      return true;
    }
  }
  return false;
}

std::size_t Corpus::min_references() const {
  if (instances.empty()) return 0;
  std::size_t n = instances.front().references.size();
  for (const auto& inst : instances) n = std::min(n, inst.references.size());
  return n;
}

const InstanceGroup* Corpus::find(std::string_view id) const {
  for (const auto& inst : instances) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

Corpus load_parallel(const std::filesystem::path& dir, Split split) {
  const auto complex_path = dir / "complex.txt";
  std::vector<std::string> sources;
  if (!read_lines(complex_path, sources)) {
    throw Error(ErrorCode::kMissingFile, complex_path.string());
  }
  std::vector<std::vector<std::string>> refs;
  for (int i = 0;; ++i) {
    const auto ref_path = dir / ("ref." + std::to_string(i) + ".txt");
    if (!std::filesystem::exists(ref_path)) break;
    auto& lines = refs.emplace_back();
    read_lines(ref_path, lines);
    if (lines.size() != sources.size()) {
      throw Error(ErrorCode::kLineCountMismatch,
                  ref_path.filename().string() + ": expected " +
                      std::to_string(sources.size()) + " lines, got " +
                      std::to_string(lines.size()));
    }
  }
  if (refs.empty()) {
    throw Error(ErrorCode::kMissingFile, (dir / "ref.0.txt").string());
  }

  const auto check_line = [](const std::string& line, const std::string& file,
                             std::size_t lineno) {
    if (trim(line).empty()) {
      throw Error(ErrorCode::kEmptyLine,
                  file + ":" + std::to_string(lineno + 1));
    }
  };

  Corpus corpus;
  corpus.name = dir.filename().empty() ? dir.parent_path().filename().string()
                                       : dir.filename().string();
  corpus.split = split;
  corpus.instances.reserve(sources.size());
  for (std::size_t line = 0; line < sources.size(); ++line) {
    check_line(sources[line], "complex.txt", line);
    InstanceGroup inst;
    inst.id = std::to_string(line);
    inst.source = Sentence::from_raw(sources[line]);
    for (std::size_t r = 0; r < refs.size(); ++r) {
      check_line(refs[r][line], "ref." + std::to_string(r) + ".txt", line);
      inst.references.push_back(Sentence::from_raw(refs[r][line]));
    }
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

Corpus load_jsonl(const std::filesystem::path& file, Split split) {
  std::vector<std::string> lines;
  if (!read_lines(file, lines)) {
    throw Error(ErrorCode::kMissingFile, file.string());
  }
  Corpus corpus;
  corpus.name = file.stem().string();
  corpus.split = split;
  std::unordered_set<std::string> seen;
  for (std::size_t lineno = 0; lineno < lines.size(); ++lineno) {
    if (trim(lines[lineno]).empty()) continue;
    const std::string where = "line " + std::to_string(lineno + 1);
    InstanceGroup inst;
    try {
      const auto obj = nlohmann::json::parse(lines[lineno]);
      inst.id = obj.at("id").get<std::string>();
      inst.source = Sentence::from_raw(obj.at("source").get<std::string>());
      const auto& refs = obj.at("references");
      if (!refs.is_array()) {
        throw Error(ErrorCode::kParseError, where + ": references not a list");
      }
      if (refs.empty()) {
        throw Error(ErrorCode::kEmptyReferences, inst.id);
      }
      for (const auto& r : refs) {
        inst.references.push_back(Sentence::from_raw(r.get<std::string>()));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, where + ": " + e.what());
    }
    if (!seen.insert(inst.id).second) {
      throw Error(ErrorCode::kDuplicateId, inst.id);
    }
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, Split split) {
  if (std::filesystem::is_directory(path)) return load_parallel(path, split);
  return load_jsonl(path, split);
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& inst : corpus.instances) {
    nlohmann::json obj;
    obj["id"] = inst.id;
    obj["source"] = inst.source.raw();
    auto refs = nlohmann::json::array();
    for (const auto& r : inst.references) refs.push_back(r.raw());
    obj["references"] = std::move(refs);
    out << obj.dump() << '\n';
  }
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingFile, file.string());
  write_jsonl(corpus, out);
}

}  // namespace mbl
