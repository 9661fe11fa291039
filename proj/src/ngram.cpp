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

#include "mbl/ngram.hpp"

#include <algorithm>

namespace mbl {

NgramMultiset::NgramMultiset(std::span<const std::string> tokens, int order)
    : order_(order) {
  if (order < 1 || tokens.size() < static_cast<std::size_t>(order)) return;
  std::string key;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    key.clear();
    for (int j = 0; j < order; ++j) {
      if (j > 0) key += ' ';
      key += tokens[i + j];
    }
    ++counts_[key];
    ++total_;
  }
}

long NgramMultiset::count(const std::string& key) const {
  const auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

void NgramMultiset::merge(const NgramMultiset& other) {
  for (const auto& [key, n] : other.counts_) counts_[key] += n;
  total_ += other.total_;
}

void NgramMultiset::max_with(const NgramMultiset& other) {
  for (const auto& [key, n] : other.counts_) {
    auto& mine = counts_[key];
    total_ += std::max(mine, n) - mine;
    mine = std::max(mine, n);
  }
}

}  // namespace mbl
