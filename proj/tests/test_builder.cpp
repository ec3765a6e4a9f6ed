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
#include "json.hpp"
#include "oss_crs/builder.hpp"
#include "oss_crs/mock_runtime.hpp"
#include "oss_crs/util.hpp"
#include "support/test_util.hpp"

using namespace oss_crs;
using namespace oss_crs_test;
using namespace std::chrono_literals;

namespace {

// Builds the toy target base image, compiles it in a container, snapshots
// the result, and returns a builder service over that snapshot.
struct BuilderFixture {
  TempDir tmp{"builder"};
  std::shared_ptr<MockRuntime> runtime;
  Snapshot snapshot;
  std::unique_ptr<BuilderService> service;

  BuilderFixture() {
    MockRuntimeOptions opts;
    opts.stop_grace = 1000ms;
    runtime = std::make_shared<MockRuntime>(tmp / "state", opts);

    ImageBuildRequest base;
    base.context_dir = fixtures_dir() / "toy-target";
    base.containerfile = "Dockerfile";
    base.tag = "target-toyproj:base";
    runtime->build_image(base);

    ContainerSpec compile;
    compile.name = "compile";
    compile.image_tag = base.tag;
    compile.entrypoint_override = {"sh", "/src/build.sh"};
    compile.network = "bridge";
    compile.env["SRC"] = "/src";
    compile.env["OUT"] = "/out";
    compile.log_sink = tmp / "compile.log";
    auto handle = runtime->run_container(compile);
    REQUIRE(handle->wait(10000ms) == ContainerState::kExited);
    REQUIRE(handle->exit_code() == 0);
    runtime->snapshot_container_image(*handle, "target-toyproj:compiled");

    snapshot.image_tag = "target-toyproj:compiled";
    snapshot.build_command = "sh /src/build.sh";
    snapshot.source_root = "/src";
    snapshot.test_command = "sh /src/test.sh";

    BuilderLimits limits{"toyfix", CpuSet::parse("0"), 256 * 1024 * 1024,
                         "256M", "net-toyfix"};
    service = std::make_unique<BuilderService>(runtime, snapshot, limits,
                                               tmp / "work");
  }

  std::string patch(const std::string& name) {
    return slurp(fixtures_dir() / "patches" / (name + ".diff"));
  }
};

constexpr const char* kCrashInput = "hello CRASHME token";
constexpr const char* kBenignInput = "hello token stream";

}  // namespace

TEST_CASE("snapshot restore is repeatable and byte-identical") {
  BuilderFixture fx;
  TempDir r1("restore");
  TempDir r2("restore");
  fx.runtime->restore_tree(fx.snapshot.image_tag, r1.path());
  fx.runtime->restore_tree(fx.snapshot.image_tag, r2.path());
  std::string why;
  CHECK_MESSAGE(trees_identical(r1.path(), r2.path(), &why), why);
  CHECK(fs::exists(r1 / "out/app_fuzzer"));
  CHECK(slurp(r1 / "out/app_fuzzer") ==
        slurp(fixtures_dir() / "toy-target" / "src" / "check.sh"));
}

TEST_CASE("the PoV crashes the unpatched baseline and benign input does not") {
  BuilderFixture fx;
  PovResult crash = fx.service->run_pov("baseline", kCrashInput,
                                        "app_fuzzer");
  CHECK(crash.crash_reproduced);
  PovResult benign = fx.service->run_pov("baseline", kBenignInput,
                                         "app_fuzzer");
  CHECK_FALSE(benign.crash_reproduced);
}

TEST_CASE("correct patch: apply ok, PoV resolved, tests pass") {
  BuilderFixture fx;
  BuildResult build = fx.service->apply_patch_build(fx.patch("correct"));
  REQUIRE(build.status == BuildResult::Status::kOk);
  CHECK_FALSE(build.patched_image_ref.empty());

  PovResult pov = fx.service->run_pov(build.patched_image_ref, kCrashInput,
                                      "app_fuzzer");
  CHECK_FALSE(pov.crash_reproduced);

  TestResult tests = fx.service->run_test(build.patched_image_ref);
  CHECK(tests.tests_passed);
}

TEST_CASE("conflicting patch: snapshot untouched, status patch_conflict") {
  BuilderFixture fx;
  BuildResult build = fx.service->apply_patch_build(fx.patch("conflicting"));
  CHECK(build.status == BuildResult::Status::kPatchConflict);
  CHECK_FALSE(build.log.empty());
  // Baseline still crashes: nothing leaked into the snapshot.
  CHECK(fx.service->run_pov("baseline", kCrashInput, "app_fuzzer")
            .crash_reproduced);
}

TEST_CASE("patch breaking the build reports build_failed with the log") {
  BuilderFixture fx;
  // A patch that rewrites build.sh into garbage: applies cleanly at /src,
  // then the rebuild exits nonzero.
  std::string build_breaker =
      "--- a/build.sh\n"
      "+++ b/build.sh\n"
      "@@ -1,9 +1,3 @@\n"
      " #!/bin/sh\n"
      "-# Containerized build: \"compile\" the scanner into the harness "
      "binary.\n"
      "-set -e\n"
      "-: \"${SRC:=/src}\"\n"
      "-: \"${OUT:=/out}\"\n"
      "-mkdir -p \"$OUT\"\n"
      "-cp \"$SRC/check.sh\" \"$OUT/app_fuzzer\"\n"
      "-chmod +x \"$OUT/app_fuzzer\"\n"
      "-echo \"built app_fuzzer\"\n"
      "+echo \"compiler exploded\" >&2\n"
      "+exit 9\n";
  BuildResult build = fx.service->apply_patch_build(build_breaker);
  CHECK(build.status == BuildResult::Status::kBuildFailed);
  CHECK(build.log.find("exited 9") != std::string::npos);
  CHECK(build.log.find("compiler exploded") != std::string::npos);
}

TEST_CASE("non-fixing patch builds but the crash persists") {
  BuilderFixture fx;
  BuildResult build = fx.service->apply_patch_build(fx.patch("nonfixing"));
  REQUIRE(build.status == BuildResult::Status::kOk);
  CHECK(fx.service->run_pov(build.patched_image_ref, kCrashInput,
                            "app_fuzzer")
            .crash_reproduced);
  CHECK(fx.service->run_test(build.patched_image_ref).tests_passed);
}

TEST_CASE("regressing patch fixes the crash but fails the tests") {
  BuilderFixture fx;
  BuildResult build = fx.service->apply_patch_build(fx.patch("regressing"));
  REQUIRE(build.status == BuildResult::Status::kOk);
  CHECK_FALSE(fx.service->run_pov(build.patched_image_ref, kCrashInput,
                                  "app_fuzzer")
                  .crash_reproduced);
  CHECK_FALSE(fx.service->run_test(build.patched_image_ref).tests_passed);
}

TEST_CASE("requests are stateless: permuted order yields identical rows") {
  std::vector<std::string> names = {"correct", "conflicting", "nonfixing",
                                    "regressing"};
  struct Row {
    std::string status;
    bool pov_no_crash = false;
    bool tests_passed = false;
  };
  auto run_matrix = [&](const std::vector<int>& order) {
    BuilderFixture fx;
    std::map<std::string, Row> rows;
    for (int idx : order) {
      const std::string& name = names[static_cast<size_t>(idx)];
      BuildResult build = fx.service->apply_patch_build(fx.patch(name));
      Row row;
      row.status = to_string(build.status);
      if (build.status == BuildResult::Status::kOk) {
        row.pov_no_crash = !fx.service
                                ->run_pov(build.patched_image_ref,
                                          kCrashInput, "app_fuzzer")
                                .crash_reproduced;
        row.tests_passed =
            fx.service->run_test(build.patched_image_ref).tests_passed;
      }
      rows[name] = row;
    }
    return rows;
  };

  auto baseline = run_matrix({0, 1, 2, 3});
  CHECK(baseline["correct"].status == "ok");
  CHECK(baseline["correct"].pov_no_crash);
  CHECK(baseline["correct"].tests_passed);
  CHECK(baseline["conflicting"].status == "patch_conflict");
  CHECK(baseline["nonfixing"].status == "ok");
  CHECK_FALSE(baseline["nonfixing"].pov_no_crash);
  CHECK(baseline["nonfixing"].tests_passed);
  CHECK(baseline["regressing"].status == "ok");
  CHECK(baseline["regressing"].pov_no_crash);
  CHECK_FALSE(baseline["regressing"].tests_passed);

  auto permuted = run_matrix({3, 1, 0, 2});
  for (const auto& name : names) {
    CHECK(permuted[name].status == baseline[name].status);
    CHECK(permuted[name].pov_no_crash == baseline[name].pov_no_crash);
    CHECK(permuted[name].tests_passed == baseline[name].tests_passed);
  }
}

TEST_CASE("no declared test command reports tests_passed with a note") {
  BuilderFixture fx;
  Snapshot no_tests = fx.snapshot;
  no_tests.test_command = "";
  BuilderLimits limits{"toyfix", CpuSet::parse("0"), 256 * 1024 * 1024,
                       "256M", "net-toyfix"};
  BuilderService service(fx.runtime, no_tests, limits, fx.tmp / "work2");
  TestResult result = service.run_test("baseline");
  CHECK(result.tests_passed);
  CHECK(result.detail == "no tests declared");
}

TEST_CASE("test-command timeout reports tests_failed") {
  BuilderFixture fx;
  Snapshot slow = fx.snapshot;
  slow.test_command = "sleep 30";
  BuilderLimits limits{"toyfix", CpuSet::parse("0"), 256 * 1024 * 1024,
                       "256M", "net-toyfix"};
  BuilderOptions opts;
  opts.test_timeout = 300ms;
  BuilderService service(fx.runtime, slow, limits, fx.tmp / "work3", opts);
  TestResult result = service.run_test("baseline");
  CHECK_FALSE(result.tests_passed);
  CHECK(result.detail.find("timed out") != std::string::npos);
}

TEST_CASE("builder work runs inside the owning CRS's allocation") {
  BuilderFixture fx;
  CHECK(fx.service->limits().cpuset.canonical() == "0");
  CHECK(fx.service->limits().memory_text == "256M");
  BuildResult build = fx.service->apply_patch_build(fx.patch("correct"));
  REQUIRE(build.status == BuildResult::Status::kOk);
  // The patched snapshot's originating container carried the CRS limits;
  // run a container from it and inspect the recorded spec.
  PovResult pov = fx.service->run_pov(build.patched_image_ref, kBenignInput,
                                      "app_fuzzer");
  CHECK_FALSE(pov.crash_reproduced);
}

TEST_CASE("HTTP surface mirrors the in-process results") {
  BuilderFixture fx;
  fx.service->start_http("127.0.0.1");
  BuilderClient client(fx.service->base_url());

  auto build = client.apply_patch_build(fx.patch("correct"));
  CHECK(build.http_status == 200);
  nlohmann::json bj = nlohmann::json::parse(build.body);
  CHECK(bj["status"] == "ok");
  std::string ref = bj["build"];

  auto pov = client.run_pov(ref, kCrashInput, "app_fuzzer");
  nlohmann::json pj = nlohmann::json::parse(pov.body);
  CHECK(pj["status"] == "no_crash");

  auto baseline_pov = client.run_pov("baseline", kCrashInput, "app_fuzzer");
  nlohmann::json bpj = nlohmann::json::parse(baseline_pov.body);
  CHECK(bpj["status"] == "crash_reproduced");

  auto tests = client.run_test(ref);
  nlohmann::json tj = nlohmann::json::parse(tests.body);
  CHECK(tj["status"] == "tests_passed");

  auto stats = fx.service->stats();
  CHECK(stats.patch_builds == 1);
  CHECK(stats.builds_ok == 1);
  CHECK(stats.povs_run == 2);
  CHECK(stats.pov_no_crash == 1);
  CHECK(stats.pov_crash == 1);
  CHECK(stats.tests_passed == 1);
  fx.service->stop_http();
}

TEST_CASE("builder client reports unreachable sidecars") {
  BuilderClient client("http://127.0.0.1:9");
  CHECK_THROWS_AS(client.run_test("baseline"), Error);
}
