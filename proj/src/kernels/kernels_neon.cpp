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

#include <arm_neon.h>

#include <cstddef>
#include <limits>

#include "mbl/kernels.hpp"

namespace mbl::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void max_inner_products_neon(const double* candidates, std::size_t n_candidates,
                             const double* references,
                             std::size_t n_references, std::size_t dim,
                             double* out) {
  for (std::size_t i = 0; i < n_candidates; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_references; ++j) {
      const double d = dot_neon(candidates + i * dim, references + j * dim, dim);
      if (d > best) best = d;
    }
    out[i] = best;
  }
}

void accumulate_neon(double* acc, const double* row, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vld1q_f64(row + i)));
  }
  for (; i < n; ++i) acc[i] += row[i];
}

constexpr KernelTable kNeonTable{Isa::kNeon, dot_neon, max_inner_products_neon,
                                 accumulate_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace mbl::kernels
