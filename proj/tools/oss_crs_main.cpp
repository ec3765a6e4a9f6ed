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

// oss-crs: the operator-facing entry point. Three phase commands plus
// validate, all driven by one crs-compose.yaml.
//
// Exit codes follow sysexits where applicable: 0 ok, 1 invalid plan or
// failed campaign step, 64 usage, 65 bad data / phase violation,
// 66 unreadable input, 70 internal error, 75 out_dir busy.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <csignal>
#include <cstdio>
#include <memory>

#include "CLI11.hpp"
#include "oss_crs/config.hpp"
#include "oss_crs/engine_runtime.hpp"
#include "oss_crs/lifecycle.hpp"
#include "oss_crs/log.hpp"
#include "oss_crs/mock_runtime.hpp"
#include "oss_crs/units.hpp"
#include "oss_crs/validate.hpp"

namespace {

using namespace oss_crs;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitSoftware = 70;
constexpr int kExitBusy = 75;

Campaign* g_campaign = nullptr;

void handle_signal(int) {
  if (g_campaign) g_campaign->request_stop();
}

struct CliArgs {
  std::string compose_path;
  std::string out_override;
  std::string timeout_override;
  std::string runtime_kind = "mock";
  std::string libcrs_path;
  int host_cores = 0;         // testing overrides
  int64_t host_memory = 0;
  int poll_ms = 250;
  bool verbose = false;
};

// Holds the out_dir lock for the lifetime of one command.
class OutDirLock {
 public:
  explicit OutDirLock(const fs::path& out_dir) {
    ensure_dir(out_dir);
    fd_ = ::open((out_dir / ".lock").c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ >= 0 && flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      locked_ = false;
    } else {
      locked_ = fd_ >= 0;
    }
  }
  ~OutDirLock() {
    if (fd_ >= 0) {
      flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  bool locked() const { return locked_; }

 private:
  int fd_ = -1;
  bool locked_ = false;
};

HostInfo host_info(const CliArgs& args) {
  if (args.host_cores > 0) {
    HostInfo h;
    for (int i = 0; i < args.host_cores; ++i) h.available_cores.insert(i);
    h.total_memory = args.host_memory > 0 ? args.host_memory
                                          : HostInfo::detect().total_memory;
    return h;
  }
  HostInfo h = HostInfo::detect();
  if (args.host_memory > 0) h.total_memory = args.host_memory;
  return h;
}

struct LoadedCampaign {
  ComposeConfig compose;
  std::vector<CrsManifest> manifests;
  ValidationResult validation;
};

LoadedCampaign load_and_validate(const CliArgs& args) {
  LoadedCampaign out;
  if (!fs::exists(args.compose_path))
    throw ConfigError("cannot read file: " + args.compose_path);
  out.compose = parse_compose_file(args.compose_path);
  if (!args.out_override.empty()) out.compose.out_dir = args.out_override;
  if (!args.timeout_override.empty()) {
    auto t = parse_duration(args.timeout_override);
    if (t.count() <= 0) throw ConfigError("timeout must be > 0");
    out.compose.run_timeout = t;
  }
  for (const auto& entry : out.compose.crs_entries) {
    fs::path manifest_path =
        resolve_manifest_path(out.compose.base_dir, entry.crs_ref);
    out.manifests.push_back(parse_manifest_file(manifest_path));
  }
  out.validation =
      validate_campaign(out.compose, out.manifests, host_info(args));
  return out;
}

int print_validation(const ValidationResult& result) {
  if (result.ok()) {
    std::printf("plan OK\n");
    return kExitOk;
  }
  for (const auto& issue : result.errors) {
    if (issue.crs.empty())
      std::fprintf(stderr, "error: %s\n", issue.message.c_str());
    else
      std::fprintf(stderr, "error: [%s] %s\n", issue.crs.c_str(),
                   issue.message.c_str());
  }
  std::fprintf(stderr, "%zu validation error(s)\n", result.errors.size());
  return kExitInvalid;
}

std::shared_ptr<ContainerRuntime> make_runtime(const CliArgs& args,
                                               const fs::path& out_dir) {
  if (args.runtime_kind == "mock")
    return std::make_shared<MockRuntime>(out_dir / "mock");
  if (args.runtime_kind == "engine") {
    EngineRuntimeOptions opts;
    opts.log_dir = out_dir / "engine-logs";
    return std::make_shared<EngineRuntime>(
        EngineRuntime::options_from_env(opts));
  }
  throw ConfigError("unknown runtime '" + args.runtime_kind +
                    "' (expected mock or engine)");
}

int run_phase_command(const CliArgs& args, const std::string& command) {
  LoadedCampaign loaded = load_and_validate(args);
  if (!loaded.validation.ok()) return print_validation(loaded.validation);

  OutDirLock lock(loaded.compose.out_dir);
  if (!lock.locked()) {
    std::fprintf(stderr, "oss-crs: out_dir %s is in use by another "
                         "invocation\n",
                 loaded.compose.out_dir.c_str());
    return kExitBusy;
  }

  CampaignOptions options;
  options.runtime = make_runtime(args, loaded.compose.out_dir);
  options.poll_interval = std::chrono::milliseconds(args.poll_ms);
  if (!args.libcrs_path.empty()) options.libcrs_path = args.libcrs_path;
  Campaign campaign(*loaded.validation.plan, options);

  g_campaign = &campaign;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  if (command == "prepare") {
    campaign.prepare();
    std::printf("prepare complete (phase: %s)\n",
                to_string(campaign.phase()).c_str());
  } else if (command == "build-target") {
    campaign.build_target();
    std::printf("build-target complete (phase: %s)\n",
                to_string(campaign.phase()).c_str());
  } else if (command == "run") {
    CampaignReport report = campaign.run();
    std::printf("run complete (%s); report: %s\n",
                report.stop_reason.c_str(),
                campaign.report_path().c_str());
  }
  g_campaign = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oss-crs: run and compose CRSs against containerized targets"};
  app.require_subcommand(1);
  app.fallthrough();  // accept `oss-crs run -f ...` as well as `-f ... run`

  CliArgs args;
  app.add_option("-f,--file", args.compose_path, "crs-compose.yaml path")
      ->required();
  app.add_option("--out", args.out_override, "override out_dir");
  app.add_option("--timeout", args.timeout_override,
                 "override run timeout (e.g. 60s)");
  app.add_option("--runtime", args.runtime_kind,
                 "container runtime: mock|engine");
  app.add_option("--libcrs", args.libcrs_path,
                 "path to the libcrs executable");
  app.add_option("--host-cores", args.host_cores,
                 "validate against this many cores instead of detecting");
  app.add_option("--host-memory", args.host_memory,
                 "validate against this many bytes of memory");
  app.add_option("--poll-interval-ms", args.poll_ms,
                 "exchange sidecar poll interval");
  app.add_flag("-v,--verbose", args.verbose, "debug logging");

  auto* validate_cmd =
      app.add_subcommand("validate", "check the campaign plan");
  auto* prepare_cmd =
      app.add_subcommand("prepare", "build CRS images and dependencies");
  auto* build_cmd = app.add_subcommand(
      "build-target", "build target images and compile the target");
  auto* run_cmd =
      app.add_subcommand("run", "launch the analysis campaign");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  if (args.verbose) set_log_level(LogLevel::kDebug);

  try {
    if (validate_cmd->parsed()) {
      LoadedCampaign loaded = load_and_validate(args);
      return print_validation(loaded.validation);
    }
    std::string command = prepare_cmd->parsed()
                              ? "prepare"
                              : build_cmd->parsed() ? "build-target" : "run";
    (void)run_cmd;
    return run_phase_command(args, command);
  } catch (const PhaseError& e) {
    std::fprintf(stderr, "oss-crs: %s\n", e.what());
    return kExitData;
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    std::fprintf(stderr, "oss-crs: %s\n", msg.c_str());
    if (msg.find("cannot read file") != std::string::npos ||
        msg.find("cannot resolve CRS manifest") != std::string::npos)
      return kExitNoInput;
    return kExitData;
  } catch (const Error& e) {
    std::fprintf(stderr, "oss-crs: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "oss-crs: internal error: %s\n", e.what());
    return kExitSoftware;
  }
}
