// Copyright 2026 The OSS-CRS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OSS_CRS_SARIF_HPP_
#define OSS_CRS_SARIF_HPP_

#include <string>

namespace oss_crs {

struct SarifCheck {
  bool valid = false;
  std::string error;
  size_t run_count = 0;
};

// Structural validation only: the document must be JSON with a top-level
// `version` and a nonempty `runs` array. Result contents are not inspected.
SarifCheck validate_sarif(const std::string& document);

}  // namespace oss_crs

#endif  // OSS_CRS_SARIF_HPP_
