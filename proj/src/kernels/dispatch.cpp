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

#include <cstdlib>
#include <string>

#include "mbl/error.hpp"
#include "mbl/kernels.hpp"

namespace mbl::kernels {

#if !defined(MBL_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(MBL_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "scalar";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(MBL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(MBL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!supported(isa)) return scalar_table();
  switch (isa) {
    case Isa::kAvx2: return *avx2_table();
    case Isa::kNeon: return *neon_table();
    default: return scalar_table();
  }
}

namespace {

const KernelTable& resolve() {
  if (const char* forced = std::getenv("MBL_KERNELS")) {
    const std::string name(forced);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (name == isa_name(isa)) return table_for(isa);
    }
  }
  if (supported(Isa::kAvx2)) return *avx2_table();
  if (supported(Isa::kNeon)) return *neon_table();
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = resolve();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return active().dot(a.data(), b.data(), a.size());
}

void max_inner_products(std::span<const double> candidates,
                        std::span<const double> references, std::size_t dim,
                        std::span<double> out) {
  if (dim == 0 || candidates.size() % dim != 0 || references.size() % dim != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "rows do not match dimension");
  }
  if (references.empty() || candidates.empty()) {
    throw Error(ErrorCode::kEmptyEmbedding, "no rows");
  }
  if (out.size() != candidates.size() / dim) {
    throw Error(ErrorCode::kInvalidArgument, "output size mismatch");
  }
  active().max_inner_products(candidates.data(), candidates.size() / dim,
                              references.data(), references.size() / dim, dim,
                              out.data());
}

}  // namespace mbl::kernels
