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

// Dense inner-product kernels behind BERTScore precision, cosine similarity
// and mean pooling. Each kernel has a scalar reference version and, where the
// target allows it, an AVX2/FMA or NEON version; one table is chosen at
// runtime from what the CPU reports. Set MBL_KERNELS=scalar|avx2|neon to force
// a particular table (unsupported requests fall back to scalar).

#ifndef MBL_KERNELS_HPP_
#define MBL_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mbl::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[i] = max_j <candidates[i], references[j]>, both row-major with `dim`
  // columns. n_references must be >= 1.
  void (*max_inner_products)(const double* candidates, std::size_t n_candidates,
                             const double* references,
                             std::size_t n_references, std::size_t dim,
                             double* out);
  // acc[i] += row[i]
  void (*accumulate)(double* acc, const double* row, std::size_t n);
};

std::string_view isa_name(Isa isa);

const KernelTable& scalar_table();
// nullptr when the variant was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// True when the variant is compiled in and the running CPU supports it.
bool supported(Isa isa);
std::vector<Isa> supported_isas();
const KernelTable& table_for(Isa isa);

// The table selected for this process (resolved once).
const KernelTable& active();

double dot(std::span<const double> a, std::span<const double> b);
void max_inner_products(std::span<const double> candidates,
                        std::span<const double> references, std::size_t dim,
                        std::span<double> out);

}  // namespace mbl::kernels

#endif  // MBL_KERNELS_HPP_
