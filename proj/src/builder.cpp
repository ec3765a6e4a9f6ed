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

#include "oss_crs/builder.hpp"

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "oss_crs/log.hpp"
#include "oss_crs/unidiff.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

constexpr const char* kBaselineRef = "baseline";

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  for (const auto& part : split(command, ' '))
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

std::string tail_of(const std::string& text, size_t max_bytes = 4096) {
  if (text.size() <= max_bytes) return text;
  return "..." + text.substr(text.size() - max_bytes);
}

}  // namespace

std::string to_string(BuildResult::Status s) {
  switch (s) {
    case BuildResult::Status::kOk:
      return "ok";
    case BuildResult::Status::kPatchConflict:
      return "patch_conflict";
    case BuildResult::Status::kBuildFailed:
      return "build_failed";
  }
  return "unknown";
}

struct BuilderService::HttpImpl {
  httplib::Server server;
  std::thread thread;
  bool started = false;
};

BuilderService::BuilderService(std::shared_ptr<ContainerRuntime> runtime,
                               Snapshot snapshot, BuilderLimits limits,
                               fs::path work_dir, BuilderOptions options)
    : runtime_(std::move(runtime)),
      snapshot_(std::move(snapshot)),
      limits_(std::move(limits)),
      work_dir_(std::move(work_dir)),
      options_(options),
      http_(std::make_unique<HttpImpl>()) {
  fs::create_directories(work_dir_);
}

BuilderService::~BuilderService() { stop_http(); }

ContainerHandlePtr BuilderService::run_step(
    const std::string& image_tag, const std::vector<std::string>& entrypoint,
    const std::vector<Mount>& mounts, const std::string& label) {
  ContainerSpec spec;
  spec.name = limits_.crs_name + "-builder-" + label;
  spec.image_tag = image_tag;
  spec.mounts = mounts;
  spec.cpuset = limits_.cpuset;
  spec.memory_limit = limits_.memory_limit;
  spec.memory_text = limits_.memory_text;
  spec.network = limits_.network;
  spec.entrypoint_override = entrypoint;
  spec.log_sink = work_dir_ / (label + ".log");
  spec.env["SRC"] = snapshot_.source_root;
  spec.env["OUT"] = snapshot_.output_dir;
  return runtime_->run_container(spec);
}

BuildResult BuilderService::apply_patch_build(const std::string& diff_text) {
  std::lock_guard<std::mutex> slot(build_slot_);
  int64_t t0 = unix_millis();
  uint64_t seq = request_seq_.fetch_add(1);
  std::string label = "pb-" + std::to_string(seq);
  BuildResult result;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    ++stats_.patch_builds;
  }
  auto finish = [&](BuildResult r) {
    r.elapsed_ms = unix_millis() - t0;
    std::lock_guard<std::mutex> lock(state_mu_);
    switch (r.status) {
      case BuildResult::Status::kOk:
        ++stats_.builds_ok;
        break;
      case BuildResult::Status::kPatchConflict:
        ++stats_.conflicts;
        break;
      case BuildResult::Status::kBuildFailed:
        ++stats_.build_failures;
        break;
    }
    return r;
  };

  UnifiedDiff diff;
  try {
    diff = parse_unified_diff(diff_text);
  } catch (const ConfigError& e) {
    result.status = BuildResult::Status::kPatchConflict;
    result.log = std::string("diff does not parse: ") + e.what();
    return finish(result);
  }

  // Fresh restore per request: no cross-request contamination.
  fs::path request_dir = work_dir_ / label;
  fs::path tree = request_dir / "tree";
  try {
    runtime_->restore_tree(snapshot_.image_tag, tree);
  } catch (const Error& e) {
    result.status = BuildResult::Status::kBuildFailed;
    result.log = std::string("snapshot restore failed: ") + e.what();
    return finish(result);
  }

  fs::path src_rel = fs::path(snapshot_.source_root).relative_path();
  fs::path patched_src = tree / src_rel;
  if (!fs::is_directory(patched_src)) {
    result.status = BuildResult::Status::kBuildFailed;
    result.log = "snapshot has no source root at " + snapshot_.source_root;
    return finish(result);
  }

  PatchOutcome patched = apply_unified_diff(patched_src, diff);
  if (!patched.ok) {
    result.status = BuildResult::Status::kPatchConflict;
    result.log = patched.detail;
    fs::remove_all(request_dir);
    return finish(result);
  }

  std::vector<Mount> mounts{{patched_src, snapshot_.source_root,
                             /*read_only=*/false}};
  ContainerHandlePtr build;
  try {
    build = run_step(snapshot_.image_tag,
                     split_command(snapshot_.build_command), mounts, label);
  } catch (const Error& e) {
    result.status = BuildResult::Status::kBuildFailed;
    result.log = e.what();
    return finish(result);
  }
  ContainerState state = build->wait(options_.build_timeout);
  if (state == ContainerState::kRunning) {
    build->stop();
    result.status = BuildResult::Status::kBuildFailed;
    result.log = "rebuild timed out";
    return finish(result);
  }
  std::string build_log;
  try {
    build_log = read_file(build->log_path());
  } catch (const Error&) {
  }
  if (build->exit_code() != 0) {
    result.status = BuildResult::Status::kBuildFailed;
    result.log = "build exited " + std::to_string(build->exit_code()) + "\n" +
                 tail_of(build_log);
    return finish(result);
  }

  std::string ref = "patched-" + limits_.crs_name + "-" + std::to_string(seq);
  try {
    runtime_->snapshot_container_image(*build, ref);
  } catch (const Error& e) {
    result.status = BuildResult::Status::kBuildFailed;
    result.log = std::string("patched snapshot failed: ") + e.what();
    return finish(result);
  }

  {
    std::lock_guard<std::mutex> lock(state_mu_);
    builds_[ref] = BuildRecord{ref, patched_src};
  }
  result.status = BuildResult::Status::kOk;
  result.patched_image_ref = ref;
  result.log = tail_of(build_log);
  return finish(result);
}

std::optional<BuilderService::BuildRecord> BuilderService::find_build(
    const std::string& ref) const {
  if (ref == kBaselineRef || ref.empty())
    return BuildRecord{snapshot_.image_tag, {}};
  std::lock_guard<std::mutex> lock(state_mu_);
  auto it = builds_.find(ref);
  if (it == builds_.end()) return std::nullopt;
  return it->second;
}

bool BuilderService::looks_like_crash(int exit_code, int term_signal,
                                      const std::string& output) {
  if (term_signal != 0) return true;
  if (exit_code >= 128) return true;
  if (output.find("ERROR: AddressSanitizer") != std::string::npos) return true;
  if (output.find("ERROR: libFuzzer") != std::string::npos) return true;
  return false;
}

PovResult BuilderService::run_pov(const std::string& build_ref,
                                  std::string_view pov_bytes,
                                  const std::string& harness) {
  PovResult result;
  auto build = find_build(build_ref);
  if (!build) {
    result.detail = "unknown build ref '" + build_ref + "'";
    {
      std::lock_guard<std::mutex> lock(state_mu_);
      ++stats_.povs_run;
      ++stats_.pov_no_crash;
    }
    return result;
  }
  uint64_t seq = request_seq_.fetch_add(1);
  std::string label = "pov-" + std::to_string(seq);
  fs::path pov_file = work_dir_ / (label + ".input");
  write_file(pov_file, pov_bytes);

  std::vector<Mount> mounts{{pov_file, "/tmp/pov-input", /*read_only=*/true}};
  if (!build->patched_src.empty())
    mounts.push_back({build->patched_src, snapshot_.source_root,
                      /*read_only=*/false});
  std::string harness_path = snapshot_.output_dir + "/" + harness;
  ContainerHandlePtr handle;
  try {
    handle = run_step(build->image_tag, {harness_path, "/tmp/pov-input"},
                      mounts, label);
  } catch (const Error& e) {
    throw Error("run_pov: harness start failed: " + std::string(e.what()));
  }
  ContainerState state = handle->wait(options_.pov_timeout);
  if (state == ContainerState::kRunning) {
    handle->stop();
    result.crash_reproduced = false;
    result.detail = "harness timed out (treated as no_crash)";
  } else {
    std::string output;
    try {
      output = read_file(handle->log_path());
    } catch (const Error&) {
    }
    int code = handle->exit_code();
    bool crash = looks_like_crash(code, code >= 128 ? code - 128 : 0, output);
    result.crash_reproduced = crash;
    result.detail = "harness exited " + std::to_string(code) + "\n" +
                    tail_of(output, 2048);
  }
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    ++stats_.povs_run;
    if (result.crash_reproduced)
      ++stats_.pov_crash;
    else
      ++stats_.pov_no_crash;
  }
  return result;
}

TestResult BuilderService::run_test(const std::string& build_ref) {
  TestResult result;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    ++stats_.tests_run;
  }
  auto record = [&](TestResult r) {
    std::lock_guard<std::mutex> lock(state_mu_);
    if (r.tests_passed)
      ++stats_.tests_passed;
    else
      ++stats_.tests_failed;
    return r;
  };
  if (snapshot_.test_command.empty()) {
    result.tests_passed = true;
    result.detail = "no tests declared";
    return record(result);
  }
  auto build = find_build(build_ref);
  if (!build) {
    result.detail = "unknown build ref '" + build_ref + "'";
    return record(result);
  }
  uint64_t seq = request_seq_.fetch_add(1);
  std::string label = "test-" + std::to_string(seq);
  std::vector<Mount> mounts;
  if (!build->patched_src.empty())
    mounts.push_back({build->patched_src, snapshot_.source_root,
                      /*read_only=*/false});
  ContainerHandlePtr handle;
  try {
    handle = run_step(build->image_tag, split_command(snapshot_.test_command),
                      mounts, label);
  } catch (const Error& e) {
    result.detail = std::string("test start failed: ") + e.what();
    return record(result);
  }
  ContainerState state = handle->wait(options_.test_timeout);
  if (state == ContainerState::kRunning) {
    handle->stop();
    result.tests_passed = false;
    result.detail = "test command timed out";
    return record(result);
  }
  std::string output;
  try {
    output = read_file(handle->log_path());
  } catch (const Error&) {
  }
  result.tests_passed = handle->exit_code() == 0;
  result.detail = "tests exited " + std::to_string(handle->exit_code()) +
                  "\n" + tail_of(output, 2048);
  return record(result);
}

BuilderStats BuilderService::stats() const {
  std::lock_guard<std::mutex> lock(state_mu_);
  return stats_;
}

void BuilderService::start_http(const std::string& bind_host, int port) {
  if (http_->started) return;
  bind_host_ = bind_host;
  auto& server = http_->server;

  server.Post("/patch-build", [this](const httplib::Request& req,
                                     httplib::Response& res) {
    BuildResult r = apply_patch_build(req.body);
    nlohmann::json j = {{"status", to_string(r.status)},
                        {"log", r.log},
                        {"elapsed_ms", r.elapsed_ms}};
    if (r.status == BuildResult::Status::kOk)
      j["build"] = r.patched_image_ref;
    res.status = 200;
    res.set_content(j.dump(), "application/json");
  });

  server.Post("/run-pov", [this](const httplib::Request& req,
                                 httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      res.status = 400;
      res.set_content(R"({"error":"expected multipart form data"})",
                      "application/json");
      return;
    }
    std::string build_ref = kBaselineRef;
    std::string harness;
    std::string pov;
    if (req.has_file("build")) build_ref = req.get_file_value("build").content;
    if (req.has_file("harness"))
      harness = req.get_file_value("harness").content;
    if (req.has_file("pov")) pov = req.get_file_value("pov").content;
    if (harness.empty()) {
      res.status = 400;
      res.set_content(R"({"error":"missing harness field"})",
                      "application/json");
      return;
    }
    PovResult r = run_pov(build_ref, pov, harness);
    nlohmann::json j = {
        {"status", r.crash_reproduced ? "crash_reproduced" : "no_crash"},
        {"detail", r.detail}};
    res.status = 200;
    res.set_content(j.dump(), "application/json");
  });

  server.Post("/run-test", [this](const httplib::Request& req,
                                  httplib::Response& res) {
    std::string build_ref = trim(req.body);
    if (build_ref.empty()) build_ref = kBaselineRef;
    TestResult r = run_test(build_ref);
    nlohmann::json j = {
        {"status", r.tests_passed ? "tests_passed" : "tests_failed"},
        {"detail", r.detail}};
    res.status = 200;
    res.set_content(j.dump(), "application/json");
  });

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  if (port == 0) {
    port_ = server.bind_to_any_port(bind_host);
  } else {
    if (!server.bind_to_port(bind_host, port))
      throw Error("builder: cannot bind port " + std::to_string(port));
    port_ = port;
  }
  http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
  server.wait_until_ready();
  http_->started = true;
  log_info("builder sidecar for '" + limits_.crs_name + "' on " + base_url());
}

void BuilderService::stop_http() {
  if (!http_ || !http_->started) return;
  http_->server.stop();
  if (http_->thread.joinable()) http_->thread.join();
  http_->started = false;
}

std::string BuilderService::base_url() const {
  return "http://" + bind_host_ + ":" + std::to_string(port_);
}

// ---------------------------------------------------------------------------
// Client

BuilderClient::BuilderClient(std::string base_url)
    : base_url_(std::move(base_url)) {}

BuilderClient::Response BuilderClient::apply_patch_build(
    const std::string& diff_text) {
  httplib::Client client(base_url_);
  client.set_read_timeout(660, 0);
  auto res = client.Post("/patch-build", diff_text, "text/x-diff");
  if (!res) throw Error("builder sidecar unreachable at " + base_url_);
  return {res->status, res->body};
}

BuilderClient::Response BuilderClient::run_pov(const std::string& build_ref,
                                               std::string_view pov_bytes,
                                               const std::string& harness) {
  httplib::Client client(base_url_);
  client.set_read_timeout(120, 0);
  httplib::MultipartFormDataItems items = {
      {"build", build_ref, "", ""},
      {"harness", harness, "", ""},
      {"pov", std::string(pov_bytes), "pov.bin", "application/octet-stream"},
  };
  auto res = client.Post("/run-pov", items);
  if (!res) throw Error("builder sidecar unreachable at " + base_url_);
  return {res->status, res->body};
}

BuilderClient::Response BuilderClient::run_test(const std::string& build_ref) {
  httplib::Client client(base_url_);
  client.set_read_timeout(660, 0);
  auto res = client.Post("/run-test", build_ref, "text/plain");
  if (!res) throw Error("builder sidecar unreachable at " + base_url_);
  return {res->status, res->body};
}

}  // namespace oss_crs
