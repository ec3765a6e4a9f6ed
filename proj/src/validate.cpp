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

#include "oss_crs/validate.hpp"

#include <unistd.h>

#include <algorithm>

#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

std::string brace_list(const std::set<int>& cores) {
  std::string out = "{";
  for (int c : cores) {
    if (out.size() > 1) out += ",";
    out += std::to_string(c);
  }
  return out + "}";
}

}  // namespace

HostInfo HostInfo::detect() {
  HostInfo info;
  long n = sysconf(_SC_NPROCESSORS_ONLN);
  if (n < 1) n = 1;
  for (long i = 0; i < n; ++i) info.available_cores.insert(static_cast<int>(i));
  long pages = sysconf(_SC_PHYS_PAGES);
  long page_size = sysconf(_SC_PAGE_SIZE);
  if (pages > 0 && page_size > 0) info.total_memory = pages * page_size;
  return info;
}

const CrsBinding* ValidatedPlan::find(const std::string& name) const {
  for (const auto& b : crs)
    if (b.name == name) return &b;
  return nullptr;
}

ValidationResult validate_campaign(const ComposeConfig& compose,
                                   const std::vector<CrsManifest>& manifests,
                                   const HostInfo& host) {
  ValidationResult result;
  auto fail = [&](const std::string& crs, const std::string& msg) {
    result.errors.push_back({crs, msg});
  };

  if (manifests.size() != compose.crs_entries.size()) {
    fail("", "internal: " + std::to_string(manifests.size()) +
                 " manifests for " +
                 std::to_string(compose.crs_entries.size()) + " CRS entries");
    return result;
  }

  std::set<std::string> route_aliases;
  for (const auto& r : compose.llm.model_routes)
    route_aliases.insert(r.alias);

  CpuSet host_cores;
  {
    // HostInfo is a bare core set; reuse the canonical formatter for parse.
    std::string desc = format_core_set(host.available_cores);
    if (!desc.empty()) host_cores = CpuSet::parse(desc);
  }

  std::set<std::string> seen_names;
  std::vector<CrsBinding> bindings;
  for (size_t i = 0; i < manifests.size(); ++i) {
    const CrsManifest& m = manifests[i];
    const CrsDeployment& dep = compose.crs_entries[i];

    if (!seen_names.insert(m.name).second)
      fail(m.name, "CRS name '" + m.name + "' is not unique in this campaign");

    if (!host_cores.contains_all(dep.cpuset)) {
      std::set<int> missing;
      std::set_difference(dep.cpuset.cores().begin(), dep.cpuset.cores().end(),
                          host.available_cores.begin(),
                          host.available_cores.end(),
                          std::inserter(missing, missing.begin()));
      fail(m.name, "cpuset " + dep.cpuset.canonical() +
                       " requests cores outside the host set: " +
                       brace_list(missing));
    }

    if (compose.llm.mode == LlmMode::kInternal) {
      for (const std::string& alias : m.required_llms) {
        if (!route_aliases.count(alias))
          fail(m.name, "CRS '" + m.name + "' requires model alias '" + alias +
                           "' which is missing from the configured model "
                           "routes");
      }
    } else if (compose.llm.mode == LlmMode::kDisabled &&
               !m.required_llms.empty()) {
      fail(m.name, "CRS '" + m.name + "' declares required_llms but LLM mode "
                       "is disabled");
    }

    if (compose.target.language &&
        !m.languages.count(*compose.target.language)) {
      fail(m.name, "CRS '" + m.name + "' does not support target language '" +
                       to_string(*compose.target.language) + "'");
    }

    if (m.crs_type == CrsType::kBugFixing) {
      bool snapshot_capable =
          !compose.target.source_dir.empty() &&
          fs::exists(compose.target.source_dir / "Dockerfile");
      if (!snapshot_capable)
        fail(m.name,
             "bug-fixing CRS '" + m.name +
                 "' requires a snapshot-capable target (a source directory "
                 "with a containerized build definition)");
    }

    CrsBinding binding;
    binding.name = m.name;
    binding.manifest = m;
    binding.deployment = dep;
    binding.network = "net-" + m.name;
    binding.key_slot = compose.llm.mode == LlmMode::kInternal;
    binding.llm_budget = dep.llm_budget.value_or(0);
    bindings.push_back(std::move(binding));
  }

  for (size_t i = 0; i < manifests.size(); ++i) {
    for (size_t j = i + 1; j < manifests.size(); ++j) {
      std::set<int> overlap = compose.crs_entries[i].cpuset.intersection(
          compose.crs_entries[j].cpuset);
      if (!overlap.empty())
        fail("", "cpuset overlap on cores " + brace_list(overlap) +
                     " between '" + manifests[i].name + "' and '" +
                     manifests[j].name + "'");
    }
  }

  int64_t total_memory = 0;
  for (const auto& dep : compose.crs_entries)
    total_memory += dep.memory_limit;
  if (total_memory > host.total_memory)
    fail("", "total memory_limit " + std::to_string(total_memory) +
                 " bytes exceeds host memory " +
                 std::to_string(host.total_memory) + " bytes");

  if (!result.errors.empty()) return result;

  ValidatedPlan plan;
  plan.target = compose.target;
  plan.crs = std::move(bindings);
  plan.llm = compose.llm;
  plan.run_timeout = compose.run_timeout;
  plan.out_dir = compose.out_dir;
  plan.initial_inputs = compose.initial_inputs;
  result.plan = std::move(plan);
  return result;
}

}  // namespace oss_crs
