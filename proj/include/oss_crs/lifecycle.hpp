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

#ifndef OSS_CRS_LIFECYCLE_HPP_
#define OSS_CRS_LIFECYCLE_HPP_

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "oss_crs/build_outputs.hpp"
#include "oss_crs/builder.hpp"
#include "oss_crs/exchange.hpp"
#include "oss_crs/llm_proxy.hpp"
#include "oss_crs/runtime.hpp"
#include "oss_crs/validate.hpp"

namespace oss_crs {

enum class Phase { kNew, kPrepared, kBuilt, kRunning, kFinished };

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

// Out-of-order phase invocation; carries the "phase is 'x', expected 'y'"
// message for the CLI's sysexits mapping.
class PhaseError : public Error {
 public:
  using Error::Error;
};

// Container paths of the standard per-CRS mounts.
inline constexpr const char* kControlDirInContainer = "/oss-crs/control";
inline constexpr const char* kFetchDirInContainer = "/oss-crs/fetch";
inline constexpr const char* kSharedDirInContainer = "/oss-crs/shared";
inline constexpr const char* kBuildOutputDirInContainer =
    "/oss-crs/build-outputs";
inline constexpr const char* kLibcrsPathInContainer = "/usr/local/bin/libcrs";

// The plumbing variables injected beyond the paper's seven.
const std::vector<std::string>& plumbing_env_vars();

// Per-campaign values fed into the env contract.
struct RunWiring {
  std::string llm_url;  // empty string in disabled mode
  std::map<std::string, std::string> llm_keys;      // crs -> token
  std::map<std::string, std::string> builder_urls;  // bug-fixing crs -> url
};

// The injected environment for one CRS: the seven contract variables plus
// the documented plumbing variables. Throws on unknown crs_name.
std::map<std::string, std::string> inject_env(const ValidatedPlan& plan,
                                              const std::string& crs_name,
                                              const RunWiring& wiring);

// Deterministic wiring, derivable from the plan alone.
std::string target_base_tag(const std::string& project);
std::string target_snapshot_tag(const std::string& project);
std::string prepare_image_tag(const ImageBuildStep& step);
std::string build_step_image_tag(const std::string& crs,
                                 const TargetBuildStep& step);
std::string run_image_tag(const std::string& crs,
                          const std::string& container);
std::vector<std::string> planned_networks(const ValidatedPlan& plan);
std::vector<std::string> planned_image_tags(const ValidatedPlan& plan);

struct SeedCounts {
  uint64_t seeds = 0;
  uint64_t diffs = 0;
  uint64_t bug_candidates = 0;
  uint64_t skipped = 0;  // unreadable corpus entries
};

// Operator-supplied initial inputs enter the exchange hash-named: corpus
// files as seeds, the diff as type diff, the SARIF report as bug-candidate.
// Throws ConfigError on an unparseable diff or structurally invalid SARIF.
SeedCounts seed_initial_inputs(const InitialInputsConfig& inputs,
                               ExchangeStore& store);

struct ContainerOutcome {
  std::string container;
  std::string state;  // "exited" | "killed" | "running"
  int exit_code = -1;
  std::string log;
};

struct CampaignReport {
  std::string target_project;
  std::string stop_reason;  // "timeout" | "all-exited" | "manual"
  int64_t started_ms = 0;
  int64_t finished_ms = 0;
  bool infrastructure_ok = true;
  std::map<std::string, uint64_t> exchange_totals;  // type dir -> count
  std::map<std::string, std::map<std::string, uint64_t>> submitted_by_origin;
  std::map<std::string, std::vector<ContainerOutcome>> containers;
  nlohmann::json llm_usage = nlohmann::json::object();
  std::map<std::string, BuilderStats> builder_stats;

  nlohmann::json to_json() const;
  uint64_t exchange_total(const std::string& type_dir) const;
};

struct CampaignOptions {
  std::shared_ptr<ContainerRuntime> runtime;
  fs::path libcrs_path;  // default: "libcrs" next to the current executable
  std::chrono::milliseconds poll_interval{250};
  std::chrono::milliseconds build_timeout{600 * 1000};
  BuilderOptions builder;
  std::function<std::string(const std::string&)> env_lookup;
  // Services bind/connect addresses usually follow the runtime; overridable
  // for tests.
  std::string service_bind_host = "127.0.0.1";
};

// The three-phase campaign driver. Phase state persists in
// <out_dir>/state.json so prepare / build-target / run may be separate
// process invocations. Phases only advance; out-of-order calls throw
// PhaseError without side effects.
class Campaign {
 public:
  Campaign(ValidatedPlan plan, CampaignOptions options);

  Phase phase() const { return phase_; }
  const ValidatedPlan& plan() const { return plan_; }

  void prepare();
  void build_target();
  CampaignReport run();

  // Thread-safe manual termination of a blocking run().
  void request_stop();

  // Mid-run introspection (fault-injection tests).
  ContainerHandlePtr find_handle(const std::string& crs,
                                 const std::string& container) const;

  fs::path report_path() const;

 private:
  void load_state();
  void save_state();
  void require_phase(Phase expected, const std::string& op) const;
  std::map<std::string, std::string> build_phase_env(
      const CrsBinding& binding) const;

  ValidatedPlan plan_;
  CampaignOptions options_;
  Phase phase_ = Phase::kNew;

  // Persisted wiring produced by earlier phases.
  std::string target_base_tag_;
  Snapshot snapshot_;
  bool has_snapshot_ = false;

  std::atomic<bool> stop_requested_{false};
  mutable std::mutex handles_mu_;
  std::map<std::pair<std::string, std::string>, ContainerHandlePtr> handles_;
};

}  // namespace oss_crs

#endif  // OSS_CRS_LIFECYCLE_HPP_
