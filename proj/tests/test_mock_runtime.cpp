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
#include <chrono>

#include "doctest.h"
#include "httplib.h"
#include "oss_crs/mock_runtime.hpp"
#include "oss_crs/util.hpp"
#include "support/test_util.hpp"

using namespace oss_crs;
using namespace oss_crs_test;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<MockRuntime> make_runtime(const fs::path& state,
                                          std::chrono::milliseconds grace =
                                              2000ms) {
  MockRuntimeOptions opts;
  opts.stop_grace = grace;
  return std::make_shared<MockRuntime>(state, opts);
}

// A minimal image with a shell entrypoint.
std::string build_script_image(MockRuntime& rt, const fs::path& work,
                               const std::string& tag,
                               const std::string& script) {
  fs::path ctx = work / ("ctx-" + tag);
  fs::create_directories(ctx);
  write_file(ctx / "main.sh", script);
  write_file(ctx / "Dockerfile",
             "FROM scratch\nCOPY main.sh /app/main.sh\n"
             "ENTRYPOINT [\"/bin/sh\", \"/app/main.sh\"]\n");
  ImageBuildRequest req;
  req.context_dir = ctx;
  req.containerfile = "Dockerfile";
  req.tag = tag;
  return rt.build_image(req);
}

ContainerSpec spec_for(const std::string& name, const std::string& tag,
                       const fs::path& log_dir) {
  ContainerSpec spec;
  spec.name = name;
  spec.image_tag = tag;
  spec.cpuset = CpuSet::parse("0");
  spec.memory_limit = 256 * 1024 * 1024;
  spec.memory_text = "256M";
  spec.network = "bridge";
  spec.log_sink = log_dir / (name + ".log");
  return spec;
}

}  // namespace

TEST_CASE("build, run to exit 0, and read the log") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  build_script_image(*rt, tmp.path(), "hello:test", "echo hello-world\n");
  auto handle = rt->run_container(spec_for("hello", "hello:test", tmp.path()));
  CHECK(handle->wait(5000ms) == ContainerState::kExited);
  CHECK(handle->exit_code() == 0);
  CHECK(slurp(handle->log_path()).find("hello-world") != std::string::npos);
}

TEST_CASE("nonzero exits are reported") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  build_script_image(*rt, tmp.path(), "fail:test", "exit 3\n");
  auto handle = rt->run_container(spec_for("fail", "fail:test", tmp.path()));
  CHECK(handle->wait(5000ms) == ContainerState::kExited);
  CHECK(handle->exit_code() == 3);
}

TEST_CASE("stop() kills within the grace period") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state", 1000ms);
  // Ignores TERM so the KILL path is exercised.
  build_script_image(*rt, tmp.path(), "stubborn:test",
                     "trap '' TERM\nwhile true; do sleep 0.1; done\n");
  auto handle =
      rt->run_container(spec_for("stubborn", "stubborn:test", tmp.path()));
  CHECK(handle->state() == ContainerState::kRunning);
  auto t0 = std::chrono::steady_clock::now();
  handle->stop();
  auto elapsed = std::chrono::steady_clock::now() - t0;
  CHECK(handle->state() == ContainerState::kKilled);
  CHECK(elapsed < 10s);
}

TEST_CASE("cooperative containers stop quickly via TERM") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state", 5000ms);
  build_script_image(*rt, tmp.path(), "coop:test",
                     "while true; do sleep 0.05; done\n");
  auto handle = rt->run_container(spec_for("coop", "coop:test", tmp.path()));
  auto t0 = std::chrono::steady_clock::now();
  handle->stop();
  CHECK(handle->state() == ContainerState::kKilled);
  CHECK(std::chrono::steady_clock::now() - t0 < 2s);
}

TEST_CASE("rebuilding identical inputs is a recorded cache hit") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  build_script_image(*rt, tmp.path(), "cached:test", "echo one\n");
  CHECK_FALSE(rt->last_build_was_cached("cached:test"));
  build_script_image(*rt, tmp.path(), "cached:test", "echo one\n");
  CHECK(rt->last_build_was_cached("cached:test"));
  // Changed content invalidates the cache.
  build_script_image(*rt, tmp.path(), "cached:test", "echo two\n");
  CHECK_FALSE(rt->last_build_was_cached("cached:test"));
}

TEST_CASE("undeclared build arg referenced by the containerfile fails with "
          "a log excerpt") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  fs::path ctx = tmp / "ctx";
  fs::create_directories(ctx);
  write_file(ctx / "Dockerfile", "ARG TARGET_BASE_IMAGE\n"
                                 "FROM ${TARGET_BASE_IMAGE}\n");
  ImageBuildRequest req;
  req.context_dir = ctx;
  req.containerfile = "Dockerfile";
  req.tag = "argless:test";
  try {
    rt->build_image(req);
    FAIL("expected BuildError");
  } catch (const BuildError& e) {
    CHECK(std::string(e.what()).find("TARGET_BASE_IMAGE") !=
          std::string::npos);
    CHECK(fs::exists(e.log_path()));
    CHECK(slurp(e.log_path()).find("ERROR") != std::string::npos);
  }
}

TEST_CASE("FROM a locally built image layers its filesystem") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  fs::path base_ctx = tmp / "base";
  fs::create_directories(base_ctx);
  write_file(base_ctx / "data.txt", "base data");
  write_file(base_ctx / "Dockerfile", "FROM scratch\nCOPY data.txt /srv/data.txt\n");
  ImageBuildRequest base;
  base.context_dir = base_ctx;
  base.containerfile = "Dockerfile";
  base.tag = "layer-base:test";
  rt->build_image(base);

  fs::path child_ctx = tmp / "child";
  fs::create_directories(child_ctx);
  write_file(child_ctx / "extra.txt", "extra");
  write_file(child_ctx / "Dockerfile",
             "ARG TARGET_BASE_IMAGE\nFROM ${TARGET_BASE_IMAGE}\n"
             "COPY extra.txt /srv/extra.txt\n");
  ImageBuildRequest child;
  child.context_dir = child_ctx;
  child.containerfile = "Dockerfile";
  child.build_args["TARGET_BASE_IMAGE"] = "layer-base:test";
  child.tag = "layer-child:test";
  rt->build_image(child);

  TempDir restored("restore");
  rt->restore_tree("layer-child:test", restored.path());
  CHECK(slurp(restored / "srv/data.txt") == "base data");
  CHECK(slurp(restored / "srv/extra.txt") == "extra");
}

TEST_CASE("snapshot of an exited container restores byte-identically") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  build_script_image(*rt, tmp.path(), "writer:test",
                     "mkdir -p out\necho fuzzer-binary > out/fuzzer\n"
                     "chmod +x out/fuzzer\n");
  auto handle =
      rt->run_container(spec_for("writer", "writer:test", tmp.path()));
  REQUIRE(handle->wait(5000ms) == ContainerState::kExited);
  REQUIRE(handle->exit_code() == 0);
  rt->snapshot_container_image(*handle, "writer:snap");

  TempDir r1("restore");
  TempDir r2("restore");
  rt->restore_tree("writer:snap", r1.path());
  rt->restore_tree("writer:snap", r2.path());
  CHECK(slurp(r1 / "out/fuzzer") == "fuzzer-binary\n");
  std::string why;
  CHECK_MESSAGE(trees_identical(r1.path(), r2.path(), &why), why);
}

TEST_CASE("snapshot of a running container is an error") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state", 500ms);
  build_script_image(*rt, tmp.path(), "long:test",
                     "while true; do sleep 0.05; done\n");
  auto handle = rt->run_container(spec_for("long", "long:test", tmp.path()));
  CHECK_THROWS_AS(rt->snapshot_container_image(*handle, "long:snap"), Error);
  handle->stop();
  // A killed container did not exit cleanly either.
  CHECK_THROWS_AS(rt->snapshot_container_image(*handle, "long:snap"), Error);
}

TEST_CASE("running a missing image fails") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  CHECK_THROWS_WITH_AS(
      rt->run_container(spec_for("ghost", "ghost:test", tmp.path())),
      doctest::Contains("image missing"), Error);
}

TEST_CASE("duplicate network names are rejected") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  rt->create_network("net-a");
  CHECK_THROWS_AS(rt->create_network("net-a"), Error);
}

TEST_CASE("network isolation: same-network resolution works, cross-network "
          "fails, shared services reach everywhere") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  rt->create_network("net-a");
  rt->create_network("net-b");

  // A tiny in-process service registered on net-a.
  httplib::Server server;
  server.Get("/ping", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("pong", "text/plain");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  rt->register_network_service("net-a", "svc", port);
  rt->register_shared_service("llm-proxy", port);

  auto& registry = rt->registry();

  // Same-network name resolution plus an actual TCP exchange.
  auto resolved = registry.resolve("net-a", "svc");
  REQUIRE(resolved.has_value());
  httplib::Client client("127.0.0.1", *resolved);
  auto reply = client.Get("/ping");
  REQUIRE(reply);
  CHECK(reply->body == "pong");

  // Cross-network: unresolvable.
  CHECK_FALSE(registry.resolve("net-b", "svc").has_value());

  // Probe matrix over synthetic services: no cross-network visibility.
  registry.register_service("net-b", "svc-b", 1);
  for (const auto& [from, name, expect] :
       std::vector<std::tuple<std::string, std::string, bool>>{
           {"net-a", "svc", true},
           {"net-a", "svc-b", false},
           {"net-b", "svc", false},
           {"net-b", "svc-b", true}}) {
    CHECK(registry.resolve(from, name).has_value() == expect);
  }

  // The shared proxy address resolves from every network.
  CHECK(registry.resolve("net-a", "llm-proxy").has_value());
  CHECK(registry.resolve("net-b", "llm-proxy").has_value());

  server.stop();
  server_thread.join();
}

TEST_CASE("env values pointing at mounts are rewritten to host paths") {
  TempDir tmp("mockrt");
  auto rt = make_runtime(tmp / "state");
  fs::path host_dir = tmp / "host-fetch";
  fs::create_directories(host_dir);
  write_file(host_dir / "artifact", "from host");

  build_script_image(*rt, tmp.path(), "env:test",
                     "cat \"$FETCH_DIR/artifact\"\n");
  ContainerSpec spec = spec_for("env", "env:test", tmp.path());
  spec.mounts.push_back({host_dir, "/oss-crs/fetch", true});
  spec.env["FETCH_DIR"] = "/oss-crs/fetch";
  auto handle = rt->run_container(spec);
  REQUIRE(handle->wait(5000ms) == ContainerState::kExited);
  CHECK(handle->exit_code() == 0);
  CHECK(slurp(handle->log_path()).find("from host") != std::string::npos);
}

TEST_CASE("images persist across runtime instances sharing a state dir") {
  TempDir tmp("mockrt");
  {
    auto rt = make_runtime(tmp / "state");
    build_script_image(*rt, tmp.path(), "persist:test", "echo persisted\n");
  }
  auto rt2 = make_runtime(tmp / "state");
  CHECK(rt2->image_exists("persist:test"));
  auto handle =
      rt2->run_container(spec_for("persist", "persist:test", tmp.path()));
  CHECK(handle->wait(5000ms) == ContainerState::kExited);
  CHECK(handle->exit_code() == 0);
}
