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

#ifndef OSS_CRS_RUNTIME_HPP_
#define OSS_CRS_RUNTIME_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oss_crs/cpuset.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

namespace fs = std::filesystem;

struct ImageBuildRequest {
  fs::path context_dir;
  fs::path containerfile;  // absolute or relative to context_dir
  std::map<std::string, std::string> build_args;
  std::string tag;
};

struct Mount {
  fs::path host_path;
  std::string container_path;
  bool read_only = true;
};

struct ContainerSpec {
  std::string name;  // unique per campaign; used for logs and teardown
  std::string image_tag;
  std::map<std::string, std::string> env;
  std::vector<Mount> mounts;
  CpuSet cpuset;
  int64_t memory_limit = 0;
  std::string memory_text;
  std::string network;  // nonempty; "bridge" for engine-default networking
  std::vector<std::string> entrypoint_override;
  fs::path log_sink;
};

enum class ContainerState { kCreated, kRunning, kExited, kKilled };

std::string to_string(ContainerState s);

// Owned by one supervisor; wait/stop are safe from other threads and
// idempotent. States move created -> running -> {exited, killed} only.
class ContainerHandle {
 public:
  virtual ~ContainerHandle() = default;

  virtual const std::string& id() const = 0;
  virtual const ContainerSpec& spec() const = 0;
  virtual ContainerState state() = 0;
  virtual int exit_code() = 0;  // meaningful once state is kExited

  // Blocks until the container leaves kRunning or the deadline passes.
  virtual ContainerState wait(
      std::optional<std::chrono::milliseconds> deadline = {}) = 0;

  // TERM, grace period, then KILL. Final state is kKilled unless the
  // container already exited on its own.
  virtual void stop() = 0;

  virtual fs::path log_path() const = 0;
};

using ContainerHandlePtr = std::shared_ptr<ContainerHandle>;

// Build failures carry the build log location for attribution.
class BuildError : public Error {
 public:
  BuildError(const std::string& msg, fs::path log_path)
      : Error(msg), log_path_(std::move(log_path)) {}
  const fs::path& log_path() const { return log_path_; }

 private:
  fs::path log_path_;
};

// The adapter seam: one real engine-CLI implementation, one in-process mock.
// All containers are siblings of the host engine (flat architecture); there
// is no nested daemon.
class ContainerRuntime {
 public:
  virtual ~ContainerRuntime() = default;

  // Returns the tag. Rebuilding with identical inputs is a cache hit.
  virtual std::string build_image(const ImageBuildRequest& req) = 0;

  virtual bool image_exists(const std::string& tag) = 0;

  // Throws on duplicate names. Containers on the same network resolve each
  // other by name; cross-network connectivity does not exist; every network
  // reaches the shared service address.
  virtual std::string create_network(const std::string& name) = 0;

  virtual ContainerHandlePtr run_container(const ContainerSpec& spec) = 0;

  // Requires state exited(0). The tag restores to the container's final
  // filesystem.
  virtual std::string snapshot_container_image(ContainerHandle& handle,
                                               const std::string& tag) = 0;

  // Materializes an image's filesystem into `dest` on the host.
  virtual void restore_tree(const std::string& image_tag,
                            const fs::path& dest) = 0;

  // Address containers use to reach host-side framework services.
  virtual std::string service_host() const = 0;

  // Service discovery hooks for host-run infrastructure. The mock models
  // them in its network registry; the engine adapter publishes via the
  // shared-host alias instead, so these default to no-ops.
  virtual void register_shared_service(const std::string& name, int port) {
    (void)name;
    (void)port;
  }
  virtual void register_network_service(const std::string& network,
                                        const std::string& name, int port) {
    (void)network;
    (void)name;
    (void)port;
  }
};

}  // namespace oss_crs

#endif  // OSS_CRS_RUNTIME_HPP_
