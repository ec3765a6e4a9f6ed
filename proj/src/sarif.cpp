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

#include "oss_crs/sarif.hpp"

#include "json.hpp"

namespace oss_crs {

SarifCheck validate_sarif(const std::string& document) {
  SarifCheck check;
  nlohmann::json doc = nlohmann::json::parse(document, nullptr,
                                             /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    check.error = "not valid JSON";
    return check;
  }
  if (!doc.is_object()) {
    check.error = "top level is not an object";
    return check;
  }
  if (!doc.contains("version")) {
    check.error = "missing top-level 'version'";
    return check;
  }
  if (!doc.contains("runs") || !doc["runs"].is_array()) {
    check.error = "missing 'runs' array";
    return check;
  }
  if (doc["runs"].empty()) {
    check.error = "'runs' array is empty";
    return check;
  }
  check.valid = true;
  check.run_count = doc["runs"].size();
  return check;
}

}  // namespace oss_crs
