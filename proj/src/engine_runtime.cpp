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

#include "oss_crs/engine_runtime.hpp"

#include <atomic>
#include <cstdlib>

#include "oss_crs/log.hpp"
#include "oss_crs/util.hpp"

extern char** environ;

namespace oss_crs {

namespace {

std::atomic<uint64_t> g_engine_seq{0};

class EngineContainerHandle : public ContainerHandle {
 public:
  EngineContainerHandle(std::string id, ContainerSpec spec,
                        std::vector<std::string> run_argv,
                        EngineRuntime::CommandRunnerFn runner,
                        std::string engine,
                        std::vector<std::string> engine_flags,
                        std::chrono::milliseconds stop_grace)
      : id_(std::move(id)),
        spec_(std::move(spec)),
        runner_(std::move(runner)),
        engine_(std::move(engine)),
        engine_flags_(std::move(engine_flags)),
        stop_grace_(stop_grace) {
    proc_ = std::make_unique<Subprocess>(std::move(run_argv),
                                         current_env(), fs::path("."),
                                         spec_.log_sink);
    proc_->start();
  }

  const std::string& id() const override { return id_; }
  const ContainerSpec& spec() const override { return spec_; }

  ContainerState state() override { return map_state(proc_->poll()); }
  int exit_code() override { return proc_->poll().exit_code; }

  ContainerState wait(
      std::optional<std::chrono::milliseconds> deadline) override {
    return map_state(proc_->wait(deadline));
  }

  void stop() override {
    if (stopped_.exchange(true)) {
      proc_->wait(stop_grace_);
      return;
    }
    std::vector<std::string> argv{engine_};
    for (const auto& f : engine_flags_) argv.push_back(f);
    argv.insert(argv.end(),
                {"stop", "-t",
                 std::to_string(stop_grace_.count() / 1000), id_});
    runner_(argv);
    // The attached CLI exits once the container stops.
    proc_->wait(stop_grace_ + std::chrono::seconds(5));
    proc_->terminate(std::chrono::seconds(2));
  }

  fs::path log_path() const override { return spec_.log_sink; }

 private:
  static std::map<std::string, std::string> current_env() {
    std::map<std::string, std::string> env;
    for (char** e = environ; *e != nullptr; ++e) {
      std::string entry(*e);
      auto eq = entry.find('=');
      if (eq != std::string::npos)
        env[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    return env;
  }

  ContainerState map_state(const ProcessStatus& st) {
    if (st.running) return ContainerState::kRunning;
    if (stopped_.load()) return ContainerState::kKilled;
    return ContainerState::kExited;
  }

  std::string id_;
  ContainerSpec spec_;
  std::unique_ptr<Subprocess> proc_;
  EngineRuntime::CommandRunnerFn runner_;
  std::string engine_;
  std::vector<std::string> engine_flags_;
  std::chrono::milliseconds stop_grace_;
  std::atomic<bool> stopped_{false};
};

}  // namespace

EngineRuntime::EngineRuntime(EngineRuntimeOptions opts, CommandRunnerFn runner)
    : opts_(std::move(opts)), runner_(std::move(runner)) {
  if (!runner_) {
    runner_ = [](const std::vector<std::string>& argv) {
      return run_command(argv);
    };
  }
  fs::create_directories(opts_.log_dir);
}

EngineRuntimeOptions EngineRuntime::options_from_env(
    EngineRuntimeOptions base) {
  if (const char* engine = std::getenv("OSS_CRS_ENGINE"); engine && *engine)
    base.engine = engine;
  if (const char* flags = std::getenv("OSS_CRS_ENGINE_FLAGS");
      flags && *flags) {
    base.extra_flags.clear();
    for (const auto& f : split(flags, ' '))
      if (!trim(f).empty()) base.extra_flags.push_back(trim(f));
  }
  return base;
}

std::vector<std::string> EngineRuntime::base_argv() const {
  std::vector<std::string> argv{opts_.engine};
  for (const auto& f : opts_.extra_flags) argv.push_back(f);
  return argv;
}

std::vector<std::string> EngineRuntime::build_argv(
    const ImageBuildRequest& req) const {
  fs::path containerfile = req.containerfile.is_absolute()
                               ? req.containerfile
                               : req.context_dir / req.containerfile;
  auto argv = base_argv();
  argv.insert(argv.end(), {"build", "-f", containerfile.string(), "-t",
                           req.tag});
  for (const auto& [k, v] : req.build_args) {
    argv.push_back("--build-arg");
    argv.push_back(k + "=" + v);
  }
  argv.push_back(req.context_dir.string());
  return argv;
}

std::vector<std::string> EngineRuntime::network_argv(
    const std::string& name) const {
  auto argv = base_argv();
  argv.insert(argv.end(), {"network", "create", name});
  return argv;
}

std::vector<std::string> EngineRuntime::run_argv(
    const ContainerSpec& spec) const {
  auto argv = base_argv();
  argv.push_back("run");
  argv.insert(argv.end(), {"--name", spec.name});
  argv.insert(argv.end(), {"--network", spec.network});
  if (!spec.cpuset.empty())
    argv.insert(argv.end(), {"--cpuset-cpus", spec.cpuset.canonical()});
  if (spec.memory_limit > 0)
    argv.insert(argv.end(), {"--memory", std::to_string(spec.memory_limit)});
  argv.insert(argv.end(), {"--add-host", "oss-crs-host:host-gateway"});
  for (const auto& [k, v] : spec.env) {
    argv.push_back("-e");
    argv.push_back(k + "=" + v);
  }
  for (const auto& m : spec.mounts) {
    argv.push_back("-v");
    argv.push_back(m.host_path.string() + ":" + m.container_path +
                   (m.read_only ? ":ro" : ""));
  }
  if (!spec.entrypoint_override.empty()) {
    argv.insert(argv.end(),
                {"--entrypoint", spec.entrypoint_override.front()});
  }
  argv.push_back(spec.image_tag);
  for (size_t i = 1; i < spec.entrypoint_override.size(); ++i)
    argv.push_back(spec.entrypoint_override[i]);
  return argv;
}

std::string EngineRuntime::build_image(const ImageBuildRequest& req) {
  CommandResult result = runner_(build_argv(req));
  std::string safe_tag = req.tag;
  for (auto& c : safe_tag)
    if (c == '/' || c == ':') c = '_';
  fs::path log = opts_.log_dir / ("build-" + safe_tag + ".log");
  write_file(log, result.output);
  if (result.exit_code != 0)
    throw BuildError("engine build of '" + req.tag + "' exited " +
                         std::to_string(result.exit_code) +
                         " (log: " + log.string() + ")",
                     log);
  return req.tag;
}

bool EngineRuntime::image_exists(const std::string& tag) {
  auto argv = base_argv();
  argv.insert(argv.end(), {"image", "inspect", tag});
  return runner_(argv).exit_code == 0;
}

std::string EngineRuntime::create_network(const std::string& name) {
  CommandResult result = runner_(network_argv(name));
  if (result.exit_code != 0)
    throw Error("engine network create '" + name + "' failed: " +
                result.output);
  return name;
}

ContainerHandlePtr EngineRuntime::run_container(const ContainerSpec& spec) {
  ContainerSpec run_spec = spec;
  if (run_spec.name.empty())
    run_spec.name = "oss-crs-" + std::to_string(g_engine_seq.fetch_add(1));
  if (run_spec.log_sink.empty())
    run_spec.log_sink = opts_.log_dir / (run_spec.name + ".log");
  return std::make_shared<EngineContainerHandle>(
      run_spec.name, run_spec, run_argv(run_spec), runner_, opts_.engine,
      opts_.extra_flags, opts_.stop_grace);
}

std::string EngineRuntime::snapshot_container_image(ContainerHandle& handle,
                                                    const std::string& tag) {
  if (handle.state() == ContainerState::kRunning)
    throw Error("snapshot: container still running");
  if (handle.state() != ContainerState::kExited || handle.exit_code() != 0)
    throw Error("snapshot: container did not exit cleanly");
  auto argv = base_argv();
  argv.insert(argv.end(), {"commit", handle.id(), tag});
  CommandResult result = runner_(argv);
  if (result.exit_code != 0)
    throw Error("engine commit failed: " + result.output);
  return tag;
}

void EngineRuntime::restore_tree(const std::string& image_tag,
                                 const fs::path& dest) {
  auto create = base_argv();
  create.insert(create.end(), {"create", image_tag});
  CommandResult created = runner_(create);
  if (created.exit_code != 0)
    throw Error("engine create failed for " + image_tag + ": " +
                created.output);
  std::string cid = trim(created.output);
  fs::create_directories(dest);
  auto cp = base_argv();
  cp.insert(cp.end(), {"cp", cid + ":/.", dest.string()});
  CommandResult copied = runner_(cp);
  auto rm = base_argv();
  rm.insert(rm.end(), {"rm", cid});
  runner_(rm);
  if (copied.exit_code != 0)
    throw Error("engine cp failed for " + image_tag + ": " + copied.output);
}

}  // namespace oss_crs
