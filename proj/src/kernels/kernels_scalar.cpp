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

#include <cstddef>
#include <limits>

#include "mbl/kernels.hpp"

namespace mbl::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void max_inner_products_scalar(const double* candidates,
                               std::size_t n_candidates,
                               const double* references,
                               std::size_t n_references, std::size_t dim,
                               double* out) {
  for (std::size_t i = 0; i < n_candidates; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_references; ++j) {
      const double d = dot_scalar(candidates + i * dim, references + j * dim, dim);
      if (d > best) best = d;
    }
    out[i] = best;
  }
}

void accumulate_scalar(double* acc, const double* row, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += row[i];
}

constexpr KernelTable kScalarTable{Isa::kScalar, dot_scalar,
                                   max_inner_products_scalar,
                                   accumulate_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

}  // namespace mbl::kernels
