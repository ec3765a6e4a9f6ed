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

#ifndef OSS_CRS_VALIDATE_HPP_
#define OSS_CRS_VALIDATE_HPP_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oss_crs/config.hpp"

namespace oss_crs {

struct HostInfo {
  std::set<int> available_cores;
  int64_t total_memory = 0;

  static HostInfo detect();
};

// One CRS bound to its resources and generated infrastructure names.
struct CrsBinding {
  std::string name;  // the manifest's declared name
  CrsManifest manifest;
  CrsDeployment deployment;
  std::string network;    // "net-<name>"
  bool key_slot = false;  // an API key will be issued (internal mode)
  Cents llm_budget = 0;   // absent budget resolves to $0
};

struct ValidatedPlan {
  TargetRef target;
  std::vector<CrsBinding> crs;
  LlmSettings llm;
  std::optional<std::chrono::milliseconds> run_timeout;
  fs::path out_dir;
  std::optional<InitialInputsConfig> initial_inputs;

  const CrsBinding* find(const std::string& name) const;
};

struct ValidationIssue {
  std::string crs;  // empty for campaign-level issues
  std::string message;
};

struct ValidationResult {
  std::vector<ValidationIssue> errors;
  std::optional<ValidatedPlan> plan;  // present iff errors is empty
  bool ok() const { return errors.empty(); }
};

// Totalized validation: every violation is reported, not just the first.
// `manifests` is parallel to `compose.crs_entries`.
ValidationResult validate_campaign(const ComposeConfig& compose,
                                   const std::vector<CrsManifest>& manifests,
                                   const HostInfo& host);

}  // namespace oss_crs

#endif  // OSS_CRS_VALIDATE_HPP_
