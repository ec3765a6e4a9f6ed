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

#ifndef OSS_CRS_BUILDER_HPP_
#define OSS_CRS_BUILDER_HPP_

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "oss_crs/runtime.hpp"

namespace oss_crs {

// A restorable image of the fully compiled target, captured after the
// build-target phase. Restoring is side-effect free and repeatable.
struct Snapshot {
  std::string image_tag;
  std::string build_command;  // the target's incremental rebuild entrypoint
  std::string source_root = "/src";
  std::string test_command;   // empty: no regression tests declared
  std::string output_dir = "/out";  // where harness binaries live
};

struct BuildResult {
  enum class Status { kOk, kPatchConflict, kBuildFailed };
  Status status = Status::kBuildFailed;
  std::string log;
  int64_t elapsed_ms = 0;
  std::string patched_image_ref;  // set on kOk
};

std::string to_string(BuildResult::Status s);

struct PovResult {
  bool crash_reproduced = false;
  std::string detail;
};

struct TestResult {
  bool tests_passed = false;
  std::string detail;
};

struct BuilderLimits {
  std::string crs_name;
  CpuSet cpuset;
  int64_t memory_limit = 0;
  std::string memory_text;
  std::string network = "bridge";
};

struct BuilderOptions {
  std::chrono::milliseconds build_timeout = std::chrono::seconds(600);
  std::chrono::milliseconds pov_timeout = std::chrono::seconds(60);
  std::chrono::milliseconds test_timeout = std::chrono::seconds(600);
};

struct BuilderStats {
  uint64_t patch_builds = 0;
  uint64_t builds_ok = 0;
  uint64_t conflicts = 0;
  uint64_t build_failures = 0;
  uint64_t povs_run = 0;
  uint64_t pov_no_crash = 0;
  uint64_t pov_crash = 0;
  uint64_t tests_run = 0;
  uint64_t tests_passed = 0;
  uint64_t tests_failed = 0;
};

// Per-CRS patch-validation sidecar. Every request restores a fresh copy of
// the snapshot, so requests are independent of each other; rebuild, PoV, and
// test containers all run inside the owning CRS's resource allocation.
// Requests are serialized FIFO: one rebuild slot per CRS.
class BuilderService {
 public:
  BuilderService(std::shared_ptr<ContainerRuntime> runtime, Snapshot snapshot,
                 BuilderLimits limits, fs::path work_dir,
                 BuilderOptions options = {});
  ~BuilderService();

  BuildResult apply_patch_build(const std::string& diff_text);

  // `build_ref` is a patched_image_ref from apply_patch_build, or "baseline"
  // for the unpatched snapshot.
  PovResult run_pov(const std::string& build_ref, std::string_view pov_bytes,
                    const std::string& harness);

  TestResult run_test(const std::string& build_ref);

  // HTTP/1.1 surface: POST /patch-build, /run-pov (multipart), /run-test.
  void start_http(const std::string& bind_host = "127.0.0.1", int port = 0);
  void stop_http();
  int port() const { return port_; }
  std::string base_url() const;

  BuilderStats stats() const;
  const BuilderLimits& limits() const { return limits_; }

 private:
  struct BuildRecord {
    std::string image_tag;
    fs::path patched_src;  // mounted over source_root for pov/test runs
  };

  std::optional<BuildRecord> find_build(const std::string& ref) const;
  ContainerHandlePtr run_step(const std::string& image_tag,
                              const std::vector<std::string>& entrypoint,
                              const std::vector<Mount>& mounts,
                              const std::string& label);
  static bool looks_like_crash(int exit_code, int term_signal,
                               const std::string& output);

  std::shared_ptr<ContainerRuntime> runtime_;
  Snapshot snapshot_;
  BuilderLimits limits_;
  fs::path work_dir_;
  BuilderOptions options_;

  std::mutex build_slot_;  // FIFO rebuild serialization
  mutable std::mutex state_mu_;
  std::map<std::string, BuildRecord> builds_;
  BuilderStats stats_;
  std::atomic<uint64_t> request_seq_{0};

  struct HttpImpl;
  std::unique_ptr<HttpImpl> http_;
  int port_ = 0;
  std::string bind_host_ = "127.0.0.1";
};

// Thin client over the sidecar HTTP API (used by the in-container command
// suite). Methods throw Error when the sidecar is unreachable.
class BuilderClient {
 public:
  explicit BuilderClient(std::string base_url);

  struct Response {
    int http_status = 0;
    std::string body;  // JSON result as returned by the sidecar
  };

  Response apply_patch_build(const std::string& diff_text);
  Response run_pov(const std::string& build_ref, std::string_view pov_bytes,
                   const std::string& harness);
  Response run_test(const std::string& build_ref);

 private:
  std::string base_url_;
};

}  // namespace oss_crs

#endif  // OSS_CRS_BUILDER_HPP_
