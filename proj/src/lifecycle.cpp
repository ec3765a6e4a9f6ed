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

#include "oss_crs/lifecycle.hpp"

#include <unistd.h>

#include <algorithm>
#include <thread>

#include "oss_crs/control.hpp"
#include "oss_crs/log.hpp"
#include "oss_crs/sarif.hpp"
#include "oss_crs/unidiff.hpp"
#include "oss_crs/units.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::kNew:
      return "new";
    case Phase::kPrepared:
      return "prepared";
    case Phase::kBuilt:
      return "built";
    case Phase::kRunning:
      return "running";
    case Phase::kFinished:
      return "finished";
  }
  return "unknown";
}

Phase phase_from_string(const std::string& s) {
  if (s == "new") return Phase::kNew;
  if (s == "prepared") return Phase::kPrepared;
  if (s == "built") return Phase::kBuilt;
  if (s == "running") return Phase::kRunning;
  if (s == "finished") return Phase::kFinished;
  throw Error("unknown phase '" + s + "'");
}

const std::vector<std::string>& plumbing_env_vars() {
  static const std::vector<std::string> kVars = {
      "OSS_CRS_CONTROL_DIR", "OSS_CRS_FETCH_DIR", "OSS_CRS_SHARED_DIR",
      "OSS_CRS_BUILD_OUTPUT_DIR", "OSS_CRS_BUILDER_URL"};
  return kVars;
}

std::map<std::string, std::string> inject_env(const ValidatedPlan& plan,
                                              const std::string& crs_name,
                                              const RunWiring& wiring) {
  const CrsBinding* binding = plan.find(crs_name);
  if (!binding) throw Error("inject_env: unknown CRS '" + crs_name + "'");
  std::map<std::string, std::string> env;
  env["OSS_CRS_TARGET"] = plan.target.project;
  env["OSS_CRS_TARGET_HARNESS"] = plan.target.harness;
  env["OSS_CRS_NAME"] = binding->name;
  env["OSS_CRS_CPUSET"] = binding->deployment.cpuset.canonical();
  env["OSS_CRS_MEMORY_LIMIT"] = binding->deployment.memory_text;
  auto key = wiring.llm_keys.find(crs_name);
  env["OSS_CRS_LLM_API_URL"] = wiring.llm_url;
  env["OSS_CRS_LLM_API_KEY"] =
      key == wiring.llm_keys.end() ? "" : key->second;
  env["OSS_CRS_CONTROL_DIR"] = kControlDirInContainer;
  env["OSS_CRS_FETCH_DIR"] = kFetchDirInContainer;
  env["OSS_CRS_SHARED_DIR"] = kSharedDirInContainer;
  env["OSS_CRS_BUILD_OUTPUT_DIR"] = kBuildOutputDirInContainer;
  if (binding->manifest.crs_type == CrsType::kBugFixing) {
    auto url = wiring.builder_urls.find(crs_name);
    env["OSS_CRS_BUILDER_URL"] =
        url == wiring.builder_urls.end() ? "" : url->second;
  }
  return env;
}

std::string target_base_tag(const std::string& project) {
  return "target-" + project + ":base";
}

std::string target_snapshot_tag(const std::string& project) {
  return "target-" + project + ":compiled";
}

std::string prepare_image_tag(const ImageBuildStep& step) {
  return step.name + ":prep";
}

std::string build_step_image_tag(const std::string& crs,
                                 const TargetBuildStep& step) {
  return crs + "-" + step.name + ":build";
}

std::string run_image_tag(const std::string& crs,
                          const std::string& container) {
  return crs + "-" + container + ":run";
}

std::vector<std::string> planned_networks(const ValidatedPlan& plan) {
  std::vector<std::string> out;
  for (const auto& b : plan.crs) out.push_back(b.network);
  return out;
}

std::vector<std::string> planned_image_tags(const ValidatedPlan& plan) {
  std::vector<std::string> out;
  if (!plan.target.source_dir.empty())
    out.push_back(target_base_tag(plan.target.project));
  for (const auto& b : plan.crs) {
    for (const auto& step : b.manifest.prepare_phase)
      out.push_back(prepare_image_tag(step));
    for (const auto& step : b.manifest.target_build_phase)
      out.push_back(build_step_image_tag(b.name, step));
    for (const auto& [container, spec] : b.manifest.crs_run_phase)
      out.push_back(run_image_tag(b.name, container));
  }
  return out;
}

SeedCounts seed_initial_inputs(const InitialInputsConfig& inputs,
                               ExchangeStore& store) {
  SeedCounts counts;
  if (inputs.corpus_dir) {
    if (!fs::is_directory(*inputs.corpus_dir))
      throw ConfigError("initial inputs: corpus dir missing: " +
                        inputs.corpus_dir->string());
    for (const auto& entry : fs::recursive_directory_iterator(
             *inputs.corpus_dir,
             fs::directory_options::skip_permission_denied)) {
      if (!entry.is_regular_file()) continue;
      std::string bytes;
      try {
        bytes = read_file(entry.path());
      } catch (const Error&) {
        ++counts.skipped;
        log_warn("initial inputs: skipping unreadable corpus entry " +
                 entry.path().string());
        continue;
      }
      auto r = store.ingest(ArtifactType::kSeed, bytes, "operator",
                            entry.path().filename().string());
      if (r.status == IngestStatus::kAdmitted) ++counts.seeds;
    }
  }
  if (inputs.diff_file) {
    std::string text = read_file(*inputs.diff_file);
    parse_unified_diff(text);  // throws ConfigError when malformed
    auto r = store.ingest(ArtifactType::kDiff, text, "operator",
                          inputs.diff_file->filename().string());
    if (r.status == IngestStatus::kAdmitted) ++counts.diffs;
  }
  if (inputs.sarif_file) {
    std::string text = read_file(*inputs.sarif_file);
    SarifCheck check = validate_sarif(text);
    if (!check.valid)
      throw ConfigError("initial inputs: invalid SARIF report (" +
                        check.error + ")");
    auto r = store.ingest(ArtifactType::kBugCandidate, text, "operator",
                          inputs.sarif_file->filename().string());
    if (r.status == IngestStatus::kAdmitted) ++counts.bug_candidates;
  }
  return counts;
}

nlohmann::json CampaignReport::to_json() const {
  nlohmann::json j;
  j["target"] = target_project;
  j["stop_reason"] = stop_reason;
  j["started_ms"] = started_ms;
  j["finished_ms"] = finished_ms;
  j["infrastructure_ok"] = infrastructure_ok;
  j["exchange"] = {{"totals", exchange_totals},
                   {"by_origin", submitted_by_origin}};
  nlohmann::json crses = nlohmann::json::object();
  for (const auto& [crs, outcomes] : containers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& o : outcomes)
      arr.push_back({{"name", o.container},
                     {"state", o.state},
                     {"exit_code", o.exit_code},
                     {"log", o.log}});
    crses[crs]["containers"] = arr;
    auto by_origin = submitted_by_origin.find(crs);
    crses[crs]["submitted"] = by_origin == submitted_by_origin.end()
                                  ? nlohmann::json::object()
                                  : nlohmann::json(by_origin->second);
    auto b = builder_stats.find(crs);
    if (b != builder_stats.end()) {
      const BuilderStats& s = b->second;
      crses[crs]["builder"] = {{"patch_builds", s.patch_builds},
                               {"builds_ok", s.builds_ok},
                               {"conflicts", s.conflicts},
                               {"build_failures", s.build_failures},
                               {"povs_run", s.povs_run},
                               {"pov_no_crash", s.pov_no_crash},
                               {"pov_crash", s.pov_crash},
                               {"tests_run", s.tests_run},
                               {"tests_passed", s.tests_passed},
                               {"tests_failed", s.tests_failed}};
    }
  }
  j["crses"] = crses;
  j["llm"] = llm_usage;
  return j;
}

uint64_t CampaignReport::exchange_total(const std::string& type_dir) const {
  auto it = exchange_totals.find(type_dir);
  return it == exchange_totals.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Campaign

namespace {

fs::path self_exe_dir() {
  char buf[4096];
  ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return ".";
  buf[n] = '\0';
  return fs::path(buf).parent_path();
}

struct CrsDirs {
  fs::path root;
  fs::path control;
  fs::path fetch;
  fs::path shared;
  fs::path build_outputs;
  fs::path builder_work;
};

CrsDirs crs_dirs(const fs::path& out_dir, const std::string& crs) {
  CrsDirs d;
  d.root = out_dir / "crs" / crs;
  d.control = d.root / "control";
  d.fetch = d.root / "fetch";
  d.shared = d.root / "shared";
  d.build_outputs = out_dir / "build-outputs" / crs;
  d.builder_work = d.root / "builder";
  return d;
}

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  for (const auto& part : split(command, ' '))
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

std::string log_tail(const fs::path& path, size_t max_bytes = 2048) {
  try {
    std::string text = read_file(path);
    if (text.size() <= max_bytes) return text;
    return "..." + text.substr(text.size() - max_bytes);
  } catch (const Error&) {
    return "";
  }
}

}  // namespace

Campaign::Campaign(ValidatedPlan plan, CampaignOptions options)
    : plan_(std::move(plan)), options_(std::move(options)) {
  if (!options_.runtime) throw Error("campaign: no container runtime");
  if (options_.libcrs_path.empty())
    options_.libcrs_path = self_exe_dir() / "libcrs";
  ensure_dir(plan_.out_dir);
  load_state();
}

fs::path Campaign::report_path() const {
  return plan_.out_dir / "campaign-report.json";
}

void Campaign::load_state() {
  fs::path state_file = plan_.out_dir / "state.json";
  if (!fs::exists(state_file)) return;
  nlohmann::json j = nlohmann::json::parse(read_file(state_file), nullptr,
                                           /*allow_exceptions=*/false);
  if (j.is_discarded()) return;
  phase_ = phase_from_string(j.value("phase", "new"));
  target_base_tag_ = j.value("target_base_tag", "");
  has_snapshot_ = j.value("has_snapshot", false);
  if (has_snapshot_) {
    snapshot_.image_tag = j["snapshot"].value("image_tag", "");
    snapshot_.build_command = j["snapshot"].value("build_command", "");
    snapshot_.source_root = j["snapshot"].value("source_root", "/src");
    snapshot_.test_command = j["snapshot"].value("test_command", "");
    snapshot_.output_dir = j["snapshot"].value("output_dir", "/out");
  }
}

void Campaign::save_state() {
  nlohmann::json j;
  j["phase"] = to_string(phase_);
  j["target_base_tag"] = target_base_tag_;
  j["has_snapshot"] = has_snapshot_;
  if (has_snapshot_) {
    j["snapshot"] = {{"image_tag", snapshot_.image_tag},
                     {"build_command", snapshot_.build_command},
                     {"source_root", snapshot_.source_root},
                     {"test_command", snapshot_.test_command},
                     {"output_dir", snapshot_.output_dir}};
  }
  write_file_atomic(plan_.out_dir / "state.json", j.dump(2) + "\n");
}

void Campaign::require_phase(Phase expected, const std::string& op) const {
  if (phase_ != expected)
    throw PhaseError(op + ": phase is '" + to_string(phase_) +
                     "', expected '" + to_string(expected) + "'");
}

void Campaign::prepare() {
  // Re-running prepare is allowed: unchanged contexts are cache hits.
  if (phase_ != Phase::kNew && phase_ != Phase::kPrepared)
    throw PhaseError("prepare: phase is '" + to_string(phase_) +
                     "', expected 'new'");
  for (const CrsBinding& binding : plan_.crs) {
    const auto& steps = binding.manifest.prepare_phase;
    for (size_t i = 0; i < steps.size(); ++i) {
      const ImageBuildStep& step = steps[i];
      ImageBuildRequest req;
      req.context_dir = binding.manifest.base_dir / step.context;
      req.containerfile = binding.manifest.base_dir / step.dockerfile;
      req.build_args = step.build_args;
      req.tag = prepare_image_tag(step);
      try {
        options_.runtime->build_image(req);
      } catch (const Error& e) {
        throw Error("prepare failed for CRS '" + binding.name + "' at step " +
                    std::to_string(i) + " ('" + step.name +
                    "'): " + e.what());
      }
      log_info("prepared image " + req.tag + " for " + binding.name);
    }
  }
  phase_ = Phase::kPrepared;
  save_state();
}

std::map<std::string, std::string> Campaign::build_phase_env(
    const CrsBinding& binding) const {
  std::map<std::string, std::string> env;
  env["OSS_CRS_TARGET"] = plan_.target.project;
  env["OSS_CRS_TARGET_HARNESS"] = plan_.target.harness;
  env["OSS_CRS_NAME"] = binding.name;
  env["OSS_CRS_CPUSET"] = binding.deployment.cpuset.canonical();
  env["OSS_CRS_MEMORY_LIMIT"] = binding.deployment.memory_text;
  env["OSS_CRS_LLM_API_URL"] = "";  // the proxy's lifetime is the run phase
  env["OSS_CRS_LLM_API_KEY"] = "";
  env["OSS_CRS_CONTROL_DIR"] = kControlDirInContainer;
  env["OSS_CRS_BUILD_OUTPUT_DIR"] = kBuildOutputDirInContainer;
  env["SRC"] = plan_.target.source_root;
  env["OUT"] = "/out";
  return env;
}

void Campaign::build_target() {
  if (phase_ != Phase::kPrepared && phase_ != Phase::kBuilt)
    throw PhaseError("build-target: phase is '" + to_string(phase_) +
                     "', expected 'prepared'");
  auto& runtime = *options_.runtime;

  if (!plan_.target.source_dir.empty()) {
    if (!fs::is_directory(plan_.target.source_dir))
      throw Error("build-target: target source missing: " +
                  plan_.target.source_dir.string());
    ImageBuildRequest req;
    req.context_dir = plan_.target.source_dir;
    req.containerfile = plan_.target.source_dir / "Dockerfile";
    req.tag = target_base_tag(plan_.target.project);
    runtime.build_image(req);
    target_base_tag_ = req.tag;
    log_info("built target base image " + req.tag);
  }

  bool needs_snapshot = std::any_of(
      plan_.crs.begin(), plan_.crs.end(), [](const CrsBinding& b) {
        return b.manifest.crs_type == CrsType::kBugFixing;
      });
  if (needs_snapshot) {
    if (target_base_tag_.empty())
      throw Error("build-target: bug-fixing campaign requires a target "
                  "source with a containerized build definition");
    ContainerSpec spec;
    spec.name = "target-compile";
    spec.image_tag = target_base_tag_;
    spec.entrypoint_override = split_command(plan_.target.build_command);
    spec.network = "bridge";
    spec.env["SRC"] = plan_.target.source_root;
    spec.env["OUT"] = "/out";
    spec.log_sink = plan_.out_dir / "logs" / "target-compile.log";
    ContainerHandlePtr compile = runtime.run_container(spec);
    ContainerState state = compile->wait(options_.build_timeout);
    if (state == ContainerState::kRunning) {
      compile->stop();
      throw Error("build-target: target compile timed out");
    }
    if (compile->exit_code() != 0)
      throw Error("build-target: target compile exited " +
                  std::to_string(compile->exit_code()) + "\n" +
                  log_tail(compile->log_path()));
    std::string snap_tag = target_snapshot_tag(plan_.target.project);
    runtime.snapshot_container_image(*compile, snap_tag);
    snapshot_ = Snapshot{snap_tag, plan_.target.build_command,
                         plan_.target.source_root, plan_.target.test_command,
                         "/out"};
    has_snapshot_ = true;
    log_info("captured compiled-target snapshot " + snap_tag);
  }

  for (const CrsBinding& binding : plan_.crs) {
    CrsDirs dirs = crs_dirs(plan_.out_dir, binding.name);
    ensure_dir(dirs.control);
    ensure_dir(dirs.build_outputs);
    const auto& steps = binding.manifest.target_build_phase;
    for (size_t i = 0; i < steps.size(); ++i) {
      const TargetBuildStep& step = steps[i];
      ImageBuildRequest req;
      req.context_dir = binding.manifest.base_dir / step.context;
      req.containerfile = binding.manifest.base_dir / step.dockerfile;
      req.tag = build_step_image_tag(binding.name, step);
      if (!target_base_tag_.empty())
        req.build_args["TARGET_BASE_IMAGE"] = target_base_tag_;
      try {
        runtime.build_image(req);
      } catch (const Error& e) {
        throw Error("build-target failed for CRS '" + binding.name +
                    "' at step " + std::to_string(i) + " ('" + step.name +
                    "'): " + e.what());
      }

      ContainerSpec spec;
      spec.name = binding.name + "-build-" + step.name;
      spec.image_tag = req.tag;
      spec.entrypoint_override = step.entrypoint;
      spec.env = build_phase_env(binding);
      spec.cpuset = binding.deployment.cpuset;
      spec.memory_limit = binding.deployment.memory_limit;
      spec.memory_text = binding.deployment.memory_text;
      spec.network = "bridge";
      spec.mounts = {
          {dirs.control, kControlDirInContainer, /*read_only=*/false},
          {dirs.build_outputs, kBuildOutputDirInContainer,
           /*read_only=*/false},
          {options_.libcrs_path, kLibcrsPathInContainer, /*read_only=*/true}};
      spec.log_sink =
          plan_.out_dir / "logs" / (binding.name + "-build-" + step.name +
                                    ".log");
      ContainerHandlePtr handle = runtime.run_container(spec);
      ContainerState state = handle->wait(options_.build_timeout);
      if (state == ContainerState::kRunning) {
        handle->stop();
        throw Error("CRS '" + binding.name + "': build step " +
                    std::to_string(i) + " ('" + step.name + "') timed out");
      }
      if (handle->exit_code() != 0)
        throw Error("CRS '" + binding.name + "': build step " +
                    std::to_string(i) + " ('" + step.name + "') exited " +
                    std::to_string(handle->exit_code()) + "\n" +
                    log_tail(handle->log_path()));
    }
  }

  phase_ = Phase::kBuilt;
  save_state();
}

void Campaign::request_stop() { stop_requested_.store(true); }

ContainerHandlePtr Campaign::find_handle(const std::string& crs,
                                         const std::string& container) const {
  std::lock_guard<std::mutex> lock(handles_mu_);
  auto it = handles_.find({crs, container});
  return it == handles_.end() ? nullptr : it->second;
}

CampaignReport Campaign::run() {
  require_phase(Phase::kBuilt, "run");
  auto& runtime = *options_.runtime;
  stop_requested_.store(false);

  CampaignReport report;
  report.target_project = plan_.target.project;
  report.started_ms = unix_millis();

  // Run images first; anything failing here aborts before side effects.
  for (const CrsBinding& binding : plan_.crs) {
    for (const auto& [container, cspec] : binding.manifest.crs_run_phase) {
      ImageBuildRequest req;
      req.context_dir = binding.manifest.base_dir / cspec.context;
      req.containerfile = binding.manifest.base_dir / cspec.dockerfile;
      req.tag = run_image_tag(binding.name, container);
      if (!target_base_tag_.empty())
        req.build_args["TARGET_BASE_IMAGE"] = target_base_tag_;
      try {
        runtime.build_image(req);
      } catch (const Error& e) {
        throw Error("run: image build failed for CRS '" + binding.name +
                    "' container '" + container + "': " + e.what());
      }
    }
  }

  for (const CrsBinding& binding : plan_.crs)
    runtime.create_network(binding.network);

  ExchangeStore store(plan_.out_dir / "exchange");
  store.open();

  RunWiring wiring;
  std::unique_ptr<LlmProxy> proxy;
  if (plan_.llm.mode == LlmMode::kInternal) {
    ProxyConfig cfg;
    cfg.mode = LlmMode::kInternal;
    cfg.routes = plan_.llm.model_routes;
    cfg.bind_host = options_.service_bind_host;
    cfg.env_lookup = options_.env_lookup;
    proxy = std::make_unique<LlmProxy>(cfg);
    proxy->start();
    std::vector<std::pair<std::string, Cents>> budgets;
    for (const auto& b : plan_.crs) budgets.push_back({b.name, b.llm_budget});
    auto keys = proxy->issue_keys(budgets);
    for (const auto& [crs, key] : keys) wiring.llm_keys[crs] = key.token;
    wiring.llm_url = "http://" + runtime.service_host() + ":" +
                     std::to_string(proxy->port()) + "/v1";
    runtime.register_shared_service("llm-proxy", proxy->port());
  } else if (plan_.llm.mode == LlmMode::kExternal) {
    ProxyConfig cfg;
    cfg.mode = LlmMode::kExternal;
    cfg.external_endpoint = plan_.llm.external_endpoint;
    cfg.external_key = plan_.llm.external_key;
    if (cfg.external_key.empty() && !plan_.llm.external_key_env.empty()) {
      if (options_.env_lookup) {
        cfg.external_key = options_.env_lookup(plan_.llm.external_key_env);
      } else if (const char* v =
                     std::getenv(plan_.llm.external_key_env.c_str())) {
        cfg.external_key = v;
      }
    }
    cfg.bind_host = options_.service_bind_host;
    proxy = std::make_unique<LlmProxy>(cfg);
    proxy->start();
    wiring.llm_url = "http://" + runtime.service_host() + ":" +
                     std::to_string(proxy->port()) + "/v1";
    for (const auto& b : plan_.crs)
      wiring.llm_keys[b.name] = cfg.external_key;
    runtime.register_shared_service("llm-proxy", proxy->port());
  }

  // Builder sidecars for bug-fixing CRSs, accounted inside the owning CRS's
  // allocation.
  std::map<std::string, std::unique_ptr<BuilderService>> builders;
  for (const CrsBinding& binding : plan_.crs) {
    if (binding.manifest.crs_type != CrsType::kBugFixing) continue;
    if (!has_snapshot_)
      throw Error("run: no compiled-target snapshot for bug-fixing CRS '" +
                  binding.name + "'");
    CrsDirs dirs = crs_dirs(plan_.out_dir, binding.name);
    BuilderLimits limits{binding.name, binding.deployment.cpuset,
                         binding.deployment.memory_limit,
                         binding.deployment.memory_text, binding.network};
    auto service = std::make_unique<BuilderService>(
        options_.runtime, snapshot_, limits, dirs.builder_work,
        options_.builder);
    service->start_http(options_.service_bind_host);
    wiring.builder_urls[binding.name] =
        "http://" + runtime.service_host() + ":" +
        std::to_string(service->port());
    runtime.register_network_service(binding.network,
                                     binding.name + "-builder",
                                     service->port());
    builders[binding.name] = std::move(service);
  }

  if (plan_.initial_inputs) {
    SeedCounts counts = seed_initial_inputs(*plan_.initial_inputs, store);
    log_info("seeded initial inputs: " + std::to_string(counts.seeds) +
             " seeds, " + std::to_string(counts.diffs) + " diffs, " +
             std::to_string(counts.bug_candidates) + " bug-candidates");
  }

  // Registrations: the framework pre-registers each CRS's fetch dir and
  // one-shot submit dirs; CRS-side registrations arrive via control files.
  std::vector<Registration> built_in;
  std::map<std::string, std::vector<Mount>> mount_tables;
  for (const CrsBinding& binding : plan_.crs) {
    CrsDirs dirs = crs_dirs(plan_.out_dir, binding.name);
    ensure_dir(dirs.control);
    ensure_dir(dirs.fetch);
    ensure_dir(dirs.shared);
    ensure_dir(dirs.build_outputs);
    built_in.push_back({binding.name, Registration::Kind::kFetch, dirs.fetch,
                        std::nullopt});
    for (ArtifactType t : kAllArtifactTypes) {
      fs::path oneshot = dirs.control / "oneshot" / artifact_dir_name(t);
      ensure_dir(oneshot);
      built_in.push_back({binding.name, Registration::Kind::kSubmit, oneshot,
                          t});
    }
    mount_tables[binding.name] = {
        {dirs.control, kControlDirInContainer, false},
        {dirs.fetch, kFetchDirInContainer, true},
        {dirs.shared, kSharedDirInContainer, false},
        {dirs.build_outputs, kBuildOutputDirInContainer, true}};
  }

  fs::path out_root = fs::absolute(plan_.out_dir).lexically_normal();
  auto translate = [mount_tables, out_root](
                       const std::string& crs,
                       const std::string& dir) -> std::optional<fs::path> {
    auto table = mount_tables.find(crs);
    const Mount* best = nullptr;
    if (table != mount_tables.end()) {
      for (const Mount& m : table->second) {
        if (dir == m.container_path ||
            dir.rfind(m.container_path + "/", 0) == 0) {
          if (!best || m.container_path.size() > best->container_path.size())
            best = &m;
        }
      }
    }
    if (best)
      return best->host_path / dir.substr(best->container_path.size() +
                                          (dir == best->container_path ? 0
                                                                       : 1));
    // Mock containers see host paths; accept them when they stay inside the
    // campaign area.
    fs::path p = fs::path(dir).lexically_normal();
    if (p.is_absolute() && fs::exists(p)) return p;
    return std::nullopt;
  };

  auto provider = [this, built_in, translate]() {
    std::vector<Registration> regs = built_in;
    for (const CrsBinding& binding : plan_.crs) {
      CrsDirs dirs = crs_dirs(plan_.out_dir, binding.name);
      for (const ControlRecord& rec : read_control_records(dirs.control)) {
        Registration reg;
        reg.crs_name = binding.name;
        if (rec.kind == ControlRecord::Kind::kSubmit) {
          reg.kind = Registration::Kind::kSubmit;
          reg.artifact_type = rec.artifact_type;
        } else if (rec.kind == ControlRecord::Kind::kFetch) {
          reg.kind = Registration::Kind::kFetch;
        } else {
          continue;  // shared / build-output records are bookkeeping
        }
        auto host_dir = translate(binding.name, rec.dir);
        if (!host_dir) {
          log_warn("sidecar: registration dir outside known mounts: " +
                   rec.dir);
          continue;
        }
        reg.dir = *host_dir;
        regs.push_back(std::move(reg));
      }
    }
    return regs;
  };

  ExchangeSidecar sidecar(store, provider, options_.poll_interval);
  sidecar.start();

  // Launch every run container concurrently.
  {
    std::lock_guard<std::mutex> lock(handles_mu_);
    handles_.clear();
  }
  phase_ = Phase::kRunning;
  save_state();
  std::vector<std::pair<std::string, std::string>> launch_order;
  try {
    for (const CrsBinding& binding : plan_.crs) {
      CrsDirs dirs = crs_dirs(plan_.out_dir, binding.name);
      auto env = inject_env(plan_, binding.name, wiring);
      for (const auto& [container, cspec] : binding.manifest.crs_run_phase) {
        ContainerSpec spec;
        spec.name = binding.name + "." + container;
        spec.image_tag = run_image_tag(binding.name, container);
        spec.env = env;
        spec.cpuset = binding.deployment.cpuset;
        spec.memory_limit = binding.deployment.memory_limit;
        spec.memory_text = binding.deployment.memory_text;
        spec.network = binding.network;
        spec.entrypoint_override = cspec.entrypoint;
        spec.log_sink = plan_.out_dir / "logs" /
                        (binding.name + "." + container + ".log");
        spec.mounts = {{dirs.control, kControlDirInContainer, false},
                       {options_.libcrs_path, kLibcrsPathInContainer, true}};
        if (cspec.mounts.count(MountKind::kFetch))
          spec.mounts.push_back({dirs.fetch, kFetchDirInContainer, true});
        if (cspec.mounts.count(MountKind::kShared))
          spec.mounts.push_back({dirs.shared, kSharedDirInContainer, false});
        if (cspec.mounts.count(MountKind::kBuildOutputs))
          spec.mounts.push_back(
              {dirs.build_outputs, kBuildOutputDirInContainer, true});
        ContainerHandlePtr handle = runtime.run_container(spec);
        {
          std::lock_guard<std::mutex> lock(handles_mu_);
          handles_[{binding.name, container}] = handle;
        }
        launch_order.push_back({binding.name, container});
      }
    }
  } catch (const Error&) {
    // Infrastructure-level launch failure: tear down and propagate.
    std::lock_guard<std::mutex> lock(handles_mu_);
    for (auto& [key, handle] : handles_)
      if (handle->state() == ContainerState::kRunning) handle->stop();
    sidecar.stop();
    throw;
  }

  // Write the injected-env transcript alongside the report.
  {
    nlohmann::json transcript = nlohmann::json::object();
    for (const CrsBinding& binding : plan_.crs)
      transcript[binding.name] = inject_env(plan_, binding.name, wiring);
    write_file_atomic(plan_.out_dir / "env-transcript.json",
                      transcript.dump(2) + "\n");
  }

  // Supervise until timeout, manual stop, or every CRS container exited.
  std::optional<std::chrono::steady_clock::time_point> deadline;
  if (plan_.run_timeout)
    deadline = std::chrono::steady_clock::now() + *plan_.run_timeout;
  std::string stop_reason = "all-exited";
  while (true) {
    if (stop_requested_.load()) {
      stop_reason = "manual";
      break;
    }
    if (deadline && std::chrono::steady_clock::now() >= *deadline) {
      stop_reason = "timeout";
      break;
    }
    bool any_running = false;
    {
      std::lock_guard<std::mutex> lock(handles_mu_);
      for (auto& [key, handle] : handles_)
        if (handle->state() == ContainerState::kRunning) any_running = true;
    }
    if (!any_running) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  // Teardown: stop CRS containers, then let the sidecar run its final sync.
  {
    std::lock_guard<std::mutex> lock(handles_mu_);
    for (auto& [key, handle] : handles_)
      if (handle->state() == ContainerState::kRunning) handle->stop();
  }
  sidecar.stop();
  for (auto& [crs, service] : builders) service->stop_http();
  if (proxy) proxy->stop();

  report.stop_reason = stop_reason;
  report.finished_ms = unix_millis();
  report.exchange_totals = store.counts_by_dir();
  report.submitted_by_origin = store.counts_by_origin();
  for (const auto& [key, handle] : handles_) {
    ContainerOutcome outcome;
    outcome.container = key.second;
    outcome.state = to_string(handle->state());
    outcome.exit_code = handle->exit_code();
    outcome.log = handle->log_path().string();
    report.containers[key.first].push_back(std::move(outcome));
  }
  if (proxy) {
    report.llm_usage = nlohmann::json::parse(proxy->usage_report_json(),
                                             nullptr, false);
    if (report.llm_usage.is_discarded())
      report.llm_usage = nlohmann::json::object();
  }
  for (const auto& [crs, service] : builders)
    report.builder_stats[crs] = service->stats();

  write_file_atomic(report_path(), report.to_json().dump(2) + "\n");
  phase_ = Phase::kFinished;
  save_state();
  log_info("campaign finished (" + stop_reason + "); report at " +
           report_path().string());
  return report;
}

}  // namespace oss_crs
