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

#ifndef MBL_LLM_PARAMS_HPP_
#define MBL_LLM_PARAMS_HPP_

#include <string>

#include "json.hpp"

namespace mbl {

struct GenerationParams {
  std::string model_id = "text-davinci-003";
  double temperature = 0.7;
  int max_tokens = 256;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;

  // Throws kInvalidArgument when temperature < 0, top_p outside (0, 1] or
  // max_tokens < 1.
  void validate() const;

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

// Keys are emitted in a fixed order; the dump is part of prompt digests.
nlohmann::ordered_json to_json(const GenerationParams& p);
GenerationParams params_from_json(const nlohmann::json& j);

}  // namespace mbl

#endif  // MBL_LLM_PARAMS_HPP_
