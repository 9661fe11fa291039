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

#ifndef MBL_NGRAM_HPP_
#define MBL_NGRAM_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mbl {

using TokenList = std::vector<std::string>;

// Multiset of the order-n n-grams of a token sequence. Keys are the n tokens
// joined by single spaces (tokens never contain whitespace).
class NgramMultiset {
 public:
  using Map = std::unordered_map<std::string, long>;

  NgramMultiset() = default;
  NgramMultiset(std::span<const std::string> tokens, int order);

  int order() const noexcept { return order_; }
  long count(const std::string& key) const;
  std::size_t distinct() const noexcept { return counts_.size(); }
  long total() const noexcept { return total_; }
  bool empty() const noexcept { return counts_.empty(); }

  // Adds every count of `other` (same order) into this multiset.
  void merge(const NgramMultiset& other);
  // Per-key maximum with `other`.
  void max_with(const NgramMultiset& other);

  Map::const_iterator begin() const { return counts_.begin(); }
  Map::const_iterator end() const { return counts_.end(); }

 private:
  int order_ = 1;
  long total_ = 0;
  Map counts_;
};

}  // namespace mbl

#endif  // MBL_NGRAM_HPP_
