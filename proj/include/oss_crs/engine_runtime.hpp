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

#ifndef OSS_CRS_ENGINE_RUNTIME_HPP_
#define OSS_CRS_ENGINE_RUNTIME_HPP_

#include <functional>

#include "oss_crs/runtime.hpp"
#include "oss_crs/subprocess.hpp"

namespace oss_crs {

struct EngineRuntimeOptions {
  // Engine binary and extra flags; env vars OSS_CRS_ENGINE and
  // OSS_CRS_ENGINE_FLAGS override these when set.
  std::string engine = "docker";
  std::vector<std::string> extra_flags;
  fs::path log_dir = "engine-logs";
  std::chrono::milliseconds stop_grace = std::chrono::seconds(10);
};

// Shells out to a Docker-CLI-compatible engine. Containers run attached so
// the CLI's stdout/stderr is the container log and its exit code is the
// container's. Host-side framework services are reachable from containers
// via the `oss-crs-host` alias mapped to the host gateway.
class EngineRuntime : public ContainerRuntime {
 public:
  // `runner` is the subprocess seam; tests substitute a recorder.
  using CommandRunnerFn =
      std::function<CommandResult(const std::vector<std::string>&)>;

  explicit EngineRuntime(EngineRuntimeOptions opts = {},
                         CommandRunnerFn runner = nullptr);

  static EngineRuntimeOptions options_from_env(EngineRuntimeOptions base = {});

  std::string build_image(const ImageBuildRequest& req) override;
  bool image_exists(const std::string& tag) override;
  std::string create_network(const std::string& name) override;
  ContainerHandlePtr run_container(const ContainerSpec& spec) override;
  std::string snapshot_container_image(ContainerHandle& handle,
                                       const std::string& tag) override;
  void restore_tree(const std::string& image_tag, const fs::path& dest) override;
  std::string service_host() const override { return "oss-crs-host"; }

  // Exposed for argv-level tests.
  std::vector<std::string> build_argv(const ImageBuildRequest& req) const;
  std::vector<std::string> run_argv(const ContainerSpec& spec) const;
  std::vector<std::string> network_argv(const std::string& name) const;

 private:
  std::vector<std::string> base_argv() const;

  EngineRuntimeOptions opts_;
  CommandRunnerFn runner_;
};

}  // namespace oss_crs

#endif  // OSS_CRS_ENGINE_RUNTIME_HPP_
