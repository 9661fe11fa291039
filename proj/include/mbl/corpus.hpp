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

#ifndef MBL_CORPUS_HPP_
#define MBL_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mbl {

// Lowercasing word tokenizer following the sacrebleu "13a" rules: punctuation
// becomes its own token, except periods and commas inside numbers and dashes
// not preceded by a digit. Deterministic; empty input yields no tokens.
std::vector<std::string> tokenize(std::string_view raw);

// Number of Unicode scalar values in a UTF-8 string. Whitespace counts.
std::size_t char_count(std::string_view utf8);

// A sentence and its tokenization. Construct through Sentence::from_raw so the
// tokens always agree with the raw text.
class Sentence {
 public:
  Sentence() = default;

  // Throws Error(kEmptySentence) when raw is blank.
  static Sentence from_raw(std::string raw);

  const std::string& raw() const noexcept { return raw_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Sentence&, const Sentence&) = default;

 private:
  std::string raw_;
  std::vector<std::string> tokens_;
};

struct InstanceGroup {
  std::string id;
  Sentence source;
  std::vector<Sentence> references;

  friend bool operator==(const InstanceGroup&, const InstanceGroup&) = default;
};

enum class Split { kValidation, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct Corpus {
  std::string name;
  Split split = Split::kValidation;
  std::vector<InstanceGroup> instances;

  // True when instances disagree on their reference count.
  bool ragged() const;
  // Smallest reference count over all instances (0 for an empty corpus).
  std::size_t min_references() const;
  const InstanceGroup* find(std::string_view id) const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Reads `complex.txt` plus `ref.0.txt` ... `ref.{n-1}.txt` from `dir`.
// Instance ids are zero-based line indices.
Corpus load_parallel(const std::filesystem::path& dir,
                     Split split = Split::kValidation);

// One JSON object per line: {"id", "source", "references": [...]}.
Corpus load_jsonl(const std::filesystem::path& file,
                  Split split = Split::kValidation);

// Directories load as the parallel layout, files as JSONL.
Corpus load_corpus(const std::filesystem::path& path,
                   Split split = Split::kValidation);

void write_jsonl(const Corpus& corpus, std::ostream& out);
void write_jsonl(const Corpus& corpus, const std::filesystem::path& file);

}  // namespace mbl

#endif  // MBL_CORPUS_HPP_
