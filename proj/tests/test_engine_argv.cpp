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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>

#include "doctest.h"
#include "oss_crs/engine_runtime.hpp"
#include "support/test_util.hpp"

using namespace oss_crs;
using namespace oss_crs_test;

namespace {

bool has_pair(const std::vector<std::string>& argv, const std::string& flag,
              const std::string& value) {
  for (size_t i = 0; i + 1 < argv.size(); ++i)
    if (argv[i] == flag && argv[i + 1] == value) return true;
  return false;
}

}  // namespace

TEST_CASE("build argv carries file, tag, build args, and context") {
  EngineRuntimeOptions opts;
  opts.engine = "docker";
  TempDir tmp("engine");
  opts.log_dir = tmp / "logs";
  EngineRuntime rt(opts);

  ImageBuildRequest req;
  req.context_dir = "/ctx";
  req.containerfile = "builder.Dockerfile";
  req.tag = "crs-x:build";
  req.build_args["TARGET_BASE_IMAGE"] = "target-p:base";
  auto argv = rt.build_argv(req);
  CHECK(argv[0] == "docker");
  CHECK(argv[1] == "build");
  CHECK(has_pair(argv, "-f", "/ctx/builder.Dockerfile"));
  CHECK(has_pair(argv, "-t", "crs-x:build"));
  CHECK(has_pair(argv, "--build-arg", "TARGET_BASE_IMAGE=target-p:base"));
  CHECK(argv.back() == "/ctx");
}

TEST_CASE("run argv pins cgroup cpuset and memory exactly as specified") {
  EngineRuntimeOptions opts;
  TempDir tmp("engine");
  opts.log_dir = tmp / "logs";
  EngineRuntime rt(opts);

  ContainerSpec spec;
  spec.name = "atl.fuzzer";
  spec.image_tag = "atl-fuzzer:run";
  spec.cpuset = CpuSet::parse("4-7");
  spec.memory_limit = 16LL * 1024 * 1024 * 1024;
  spec.memory_text = "16G";
  spec.network = "net-atl";
  spec.env["OSS_CRS_NAME"] = "atl";
  spec.mounts.push_back({"/host/fetch", "/oss-crs/fetch", true});
  spec.mounts.push_back({"/host/control", "/oss-crs/control", false});
  spec.entrypoint_override = {"sh", "/crs/run.sh"};

  auto argv = rt.run_argv(spec);
  CHECK(argv[0] == "docker");
  CHECK(argv[1] == "run");
  CHECK(has_pair(argv, "--name", "atl.fuzzer"));
  CHECK(has_pair(argv, "--network", "net-atl"));
  CHECK(has_pair(argv, "--cpuset-cpus", "4-7"));
  CHECK(has_pair(argv, "--memory", "17179869184"));
  CHECK(has_pair(argv, "-e", "OSS_CRS_NAME=atl"));
  CHECK(has_pair(argv, "-v", "/host/fetch:/oss-crs/fetch:ro"));
  CHECK(has_pair(argv, "-v", "/host/control:/oss-crs/control"));
  CHECK(has_pair(argv, "--add-host", "oss-crs-host:host-gateway"));
  CHECK(has_pair(argv, "--entrypoint", "sh"));
  // Image tag precedes the trailing entrypoint args.
  auto image_it = std::find(argv.begin(), argv.end(), "atl-fuzzer:run");
  REQUIRE(image_it != argv.end());
  CHECK(*(image_it + 1) == "/crs/run.sh");
}

TEST_CASE("engine and flags come from OSS_CRS_ENGINE / OSS_CRS_ENGINE_FLAGS") {
  setenv("OSS_CRS_ENGINE", "podman", 1);
  setenv("OSS_CRS_ENGINE_FLAGS", "--context remote", 1);
  auto opts = EngineRuntime::options_from_env();
  unsetenv("OSS_CRS_ENGINE");
  unsetenv("OSS_CRS_ENGINE_FLAGS");
  CHECK(opts.engine == "podman");
  REQUIRE(opts.extra_flags.size() == 2);
  CHECK(opts.extra_flags[0] == "--context");
  CHECK(opts.extra_flags[1] == "remote");

  TempDir tmp("engine");
  opts.log_dir = tmp / "logs";
  EngineRuntime rt(opts);
  auto argv = rt.network_argv("net-x");
  REQUIRE(argv.size() >= 5);
  CHECK(argv[0] == "podman");
  CHECK(argv[1] == "--context");
  CHECK(argv[2] == "remote");
  CHECK(argv[3] == "network");
  CHECK(argv[4] == "create");
}

TEST_CASE("build failures surface the log path via a recorded runner") {
  EngineRuntimeOptions opts;
  TempDir tmp("engine");
  opts.log_dir = tmp / "logs";
  std::vector<std::vector<std::string>> calls;
  EngineRuntime rt(opts, [&calls](const std::vector<std::string>& argv) {
    calls.push_back(argv);
    return CommandResult{1, "step 3/4: compile error"};
  });
  ImageBuildRequest req;
  req.context_dir = "/ctx";
  req.containerfile = "Dockerfile";
  req.tag = "bad:img";
  try {
    rt.build_image(req);
    FAIL("expected BuildError");
  } catch (const BuildError& e) {
    CHECK(fs::exists(e.log_path()));
    CHECK(slurp(e.log_path()).find("compile error") != std::string::npos);
  }
  REQUIRE(calls.size() == 1);
  CHECK(calls[0][1] == "build");
}

TEST_CASE("restore_tree drives create/cp/rm through the engine CLI") {
  EngineRuntimeOptions opts;
  TempDir tmp("engine");
  opts.log_dir = tmp / "logs";
  std::vector<std::vector<std::string>> calls;
  EngineRuntime rt(opts, [&calls](const std::vector<std::string>& argv) {
    calls.push_back(argv);
    if (argv[1] == "create") return CommandResult{0, "abc123\n"};
    return CommandResult{0, ""};
  });
  rt.restore_tree("snap:tag", tmp / "restored");
  REQUIRE(calls.size() == 3);
  CHECK(calls[0][1] == "create");
  CHECK(calls[1][1] == "cp");
  CHECK(calls[1][2] == "abc123:/.");
  CHECK(calls[2][1] == "rm");
}
