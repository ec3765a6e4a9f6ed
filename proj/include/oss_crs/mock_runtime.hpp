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

#ifndef OSS_CRS_MOCK_RUNTIME_HPP_
#define OSS_CRS_MOCK_RUNTIME_HPP_

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oss_crs/runtime.hpp"

namespace oss_crs {

// In-process stand-in for real container networks: (network, name) -> port.
// Lookups from a different network fail; shared services resolve from every
// network. This is what makes isolation assertable in tests.
class MockNetworkRegistry {
 public:
  void create_network(const std::string& name);
  bool network_exists(const std::string& name) const;
  void register_service(const std::string& network, const std::string& name,
                        int port);
  void register_shared_service(const std::string& name, int port);
  std::optional<int> resolve(const std::string& from_network,
                             const std::string& name) const;

 private:
  mutable std::mutex mu_;
  std::set<std::string> networks_;
  std::map<std::pair<std::string, std::string>, int> services_;
  std::map<std::string, int> shared_;
};

struct MockRuntimeOptions {
  std::chrono::milliseconds stop_grace = std::chrono::seconds(10);
  // Host directories prepended to PATH inside mock containers (libcrs).
  std::vector<fs::path> extra_path_dirs;
};

// Runs entrypoints as supervised local processes, one sandbox directory per
// container. Images are persisted trees under <state_dir>/images so separate
// CLI invocations (prepare / build-target / run) see each other's builds.
//
// Containerfile support: FROM, ARG, ENV, COPY, WORKDIR, ENTRYPOINT, CMD.
// RUN directives are recorded in the build log, not executed; mock fixtures
// do their work in container entrypoints instead.
class MockRuntime : public ContainerRuntime,
                    public std::enable_shared_from_this<MockRuntime> {
 public:
  explicit MockRuntime(fs::path state_dir, MockRuntimeOptions opts = {});

  std::string build_image(const ImageBuildRequest& req) override;
  bool image_exists(const std::string& tag) override;
  std::string create_network(const std::string& name) override;
  ContainerHandlePtr run_container(const ContainerSpec& spec) override;
  std::string snapshot_container_image(ContainerHandle& handle,
                                       const std::string& tag) override;
  void restore_tree(const std::string& image_tag, const fs::path& dest) override;
  std::string service_host() const override { return "127.0.0.1"; }
  void register_shared_service(const std::string& name, int port) override {
    registry_.register_shared_service(name, port);
  }
  void register_network_service(const std::string& network,
                                const std::string& name, int port) override {
    registry_.register_service(network, name, port);
  }

  MockNetworkRegistry& registry() { return registry_; }
  const fs::path& state_dir() const { return state_dir_; }

  // True when the last build_image call for `tag` was served from cache.
  bool last_build_was_cached(const std::string& tag) const;

 private:
  struct ImageMeta;

  fs::path image_dir(const std::string& tag) const;
  ImageMeta load_image_meta(const std::string& tag) const;

  fs::path state_dir_;
  MockRuntimeOptions opts_;
  MockNetworkRegistry registry_;
  mutable std::mutex mu_;
  std::set<std::string> cached_builds_;
  std::atomic<uint64_t> container_seq_{0};
};

}  // namespace oss_crs

#endif  // OSS_CRS_MOCK_RUNTIME_HPP_
