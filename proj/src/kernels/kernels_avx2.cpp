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

// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <cstddef>
#include <limits>

#include "mbl/kernels.hpp"

namespace mbl::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

// Four reference rows per pass so each candidate load feeds four FMAs.
void max_inner_products_avx2(const double* candidates, std::size_t n_candidates,
                             const double* references,
                             std::size_t n_references, std::size_t dim,
                             double* out) {
  for (std::size_t i = 0; i < n_candidates; ++i) {
    const double* c = candidates + i * dim;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t j = 0;
    for (; j + 4 <= n_references; j += 4) {
      const double* r0 = references + j * dim;
      const double* r1 = r0 + dim;
      const double* r2 = r1 + dim;
      const double* r3 = r2 + dim;
      __m256d a0 = _mm256_setzero_pd();
      __m256d a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd();
      __m256d a3 = _mm256_setzero_pd();
      std::size_t k = 0;
      for (; k + 4 <= dim; k += 4) {
        const __m256d cv = _mm256_loadu_pd(c + k);
        a0 = _mm256_fmadd_pd(cv, _mm256_loadu_pd(r0 + k), a0);
        a1 = _mm256_fmadd_pd(cv, _mm256_loadu_pd(r1 + k), a1);
        a2 = _mm256_fmadd_pd(cv, _mm256_loadu_pd(r2 + k), a2);
        a3 = _mm256_fmadd_pd(cv, _mm256_loadu_pd(r3 + k), a3);
      }
      double d0 = hsum(a0);
      double d1 = hsum(a1);
      double d2 = hsum(a2);
      double d3 = hsum(a3);
      for (; k < dim; ++k) {
        d0 += c[k] * r0[k];
        d1 += c[k] * r1[k];
        d2 += c[k] * r2[k];
        d3 += c[k] * r3[k];
      }
      if (d0 > best) best = d0;
      if (d1 > best) best = d1;
      if (d2 > best) best = d2;
      if (d3 > best) best = d3;
    }
    for (; j < n_references; ++j) {
      const double d = dot_avx2(c, references + j * dim, dim);
      if (d > best) best = d;
    }
    out[i] = best;
  }
}

void accumulate_avx2(double* acc, const double* row, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i),
                                            _mm256_loadu_pd(row + i)));
  }
  for (; i < n; ++i) acc[i] += row[i];
}

constexpr KernelTable kAvx2Table{Isa::kAvx2, dot_avx2, max_inner_products_avx2,
                                 accumulate_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2Table; }

}  // namespace mbl::kernels
