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

#ifndef MBL_RANDOM_HPP_
#define MBL_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace mbl {

// All sampling draws from std::mt19937_64 (its output sequence is fixed by
// the standard). Bounded draws use rejection sampling instead of
// std::uniform_int_distribution, whose algorithm varies between standard
// libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// Durstenfeld's Fisher-Yates: for i from n-1 down to 1, swap item i with an
// item drawn uniformly from [0, i].
template <typename T>
void seeded_shuffle(std::span<T> items, std::uint64_t seed) {
  SeededRng rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

// First `k` positions of a forward Fisher-Yates pass: position i is swapped
// with a uniform draw from [i, n). Leaves the sample in items[0..k).
template <typename T>
void seeded_partial_shuffle(std::span<T> items, std::size_t k, std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t n = items.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    using std::swap;
    swap(items[i], items[j]);
  }
}

}  // namespace mbl

#endif  // MBL_RANDOM_HPP_
