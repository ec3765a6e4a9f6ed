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
#include <thread>

#include "doctest.h"
#include "oss_crs/lifecycle.hpp"
#include "oss_crs/llm_proxy.hpp"
#include "oss_crs/mock_runtime.hpp"
#include "oss_crs/util.hpp"
#include "support/test_util.hpp"

using namespace oss_crs;
using namespace oss_crs_test;
using namespace std::chrono_literals;

namespace {

HostInfo big_host() {
  HostInfo h;
  for (int i = 0; i < 16; ++i) h.available_cores.insert(i);
  h.total_memory = 64LL * 1024 * 1024 * 1024;
  return h;
}

ValidatedPlan toy_plan(const fs::path& out_dir) {
  ComposeConfig compose =
      parse_compose_file(fixtures_dir() / "compose" / "compose-toy.yaml");
  compose.out_dir = out_dir;
  std::vector<CrsManifest> manifests;
  for (const auto& entry : compose.crs_entries)
    manifests.push_back(parse_manifest_file(
        resolve_manifest_path(compose.base_dir, entry.crs_ref)));
  auto result = validate_campaign(compose, manifests, big_host());
  REQUIRE_MESSAGE(result.ok(), "toy compose must validate");
  return *result.plan;
}

CampaignOptions mock_options(const fs::path& out_dir) {
  CampaignOptions options;
  MockRuntimeOptions mock_opts;
  mock_opts.stop_grace = 2s;
  mock_opts.extra_path_dirs = {bin_dir()};
  options.runtime = std::make_shared<MockRuntime>(out_dir / "mock",
                                                  mock_opts);
  options.libcrs_path = bin_dir() / "libcrs";
  options.poll_interval = 100ms;
  return options;
}

RunWiring sample_wiring() {
  RunWiring wiring;
  wiring.llm_url = "http://127.0.0.1:4000/v1";
  wiring.llm_keys["atl"] = "sk-test-atl";
  return wiring;
}

ValidatedPlan paper_env_plan() {
  ComposeConfig compose;
  compose.target.project = "libxml2";
  compose.target.harness = "xml_read";
  compose.crs_entries.push_back({"atl", CpuSet::parse("4-7"),
                                 16LL * 1024 * 1024 * 1024, "16G",
                                 std::nullopt});
  CrsManifest m;
  m.name = "atl";
  m.crs_type = CrsType::kBugFinding;
  m.languages = {Language::kC};
  RunContainerSpec run;
  run.dockerfile = "run.Dockerfile";
  m.crs_run_phase.emplace_back("fuzzer", run);
  auto result = validate_campaign(compose, {m}, big_host());
  REQUIRE(result.ok());
  return *result.plan;
}

}  // namespace

TEST_CASE("inject_env reproduces the documented seven-variable contract") {
  ValidatedPlan plan = paper_env_plan();
  auto env = inject_env(plan, "atl", sample_wiring());
  CHECK(env.at("OSS_CRS_TARGET") == "libxml2");
  CHECK(env.at("OSS_CRS_TARGET_HARNESS") == "xml_read");
  CHECK(env.at("OSS_CRS_NAME") == "atl");
  CHECK(env.at("OSS_CRS_CPUSET") == "4-7");
  CHECK(env.at("OSS_CRS_MEMORY_LIMIT") == "16G");
  CHECK(env.at("OSS_CRS_LLM_API_URL") == "http://127.0.0.1:4000/v1");
  CHECK(env.at("OSS_CRS_LLM_API_KEY") == "sk-test-atl");

  // Everything else must be a documented plumbing variable.
  const auto& plumbing = plumbing_env_vars();
  for (const auto& [key, value] : env) {
    bool paper = key == "OSS_CRS_TARGET" || key == "OSS_CRS_TARGET_HARNESS" ||
                 key == "OSS_CRS_NAME" || key == "OSS_CRS_CPUSET" ||
                 key == "OSS_CRS_MEMORY_LIMIT" ||
                 key == "OSS_CRS_LLM_API_URL" ||
                 key == "OSS_CRS_LLM_API_KEY";
    bool documented = std::find(plumbing.begin(), plumbing.end(), key) !=
                      plumbing.end();
    bool known = paper || documented;
    CHECK_MESSAGE(known, "undocumented env var: " << key);
  }
  // Bug-finding CRSs get no builder URL.
  CHECK_FALSE(env.count("OSS_CRS_BUILDER_URL"));
}

TEST_CASE("disabled LLM mode injects empty URL and key") {
  ValidatedPlan plan = paper_env_plan();
  RunWiring wiring;  // disabled: no URL, no keys
  auto env = inject_env(plan, "atl", wiring);
  CHECK(env.at("OSS_CRS_LLM_API_URL") == "");
  CHECK(env.at("OSS_CRS_LLM_API_KEY") == "");
}

TEST_CASE("keys differ across CRSs in the same campaign") {
  LlmProxy proxy(ProxyConfig{});
  auto keys = proxy.issue_keys({{"a", 1000}, {"b", 1000}});
  TempDir tmp("lifecycle");
  ValidatedPlan plan = toy_plan(tmp / "out");
  RunWiring wiring;
  wiring.llm_url = "http://x/v1";
  wiring.llm_keys["toyfuzz"] = keys["a"].token;
  wiring.llm_keys["toyfix"] = keys["b"].token;
  auto env_a = inject_env(plan, "toyfuzz", wiring);
  auto env_b = inject_env(plan, "toyfix", wiring);
  CHECK(env_a.at("OSS_CRS_LLM_API_KEY") != env_b.at("OSS_CRS_LLM_API_KEY"));
}

TEST_CASE("inject_env rejects unknown CRS names") {
  ValidatedPlan plan = paper_env_plan();
  CHECK_THROWS_AS(inject_env(plan, "nope", sample_wiring()), Error);
}

TEST_CASE("wiring is deterministic given the same plan") {
  TempDir tmp("lifecycle");
  ValidatedPlan p1 = toy_plan(tmp / "out1");
  ValidatedPlan p2 = toy_plan(tmp / "out2");
  CHECK(planned_image_tags(p1) == planned_image_tags(p2));
  CHECK(planned_networks(p1) == planned_networks(p2));
  RunWiring wiring;
  auto env1 = inject_env(p1, "toyfuzz", wiring);
  auto env2 = inject_env(p2, "toyfuzz", wiring);
  CHECK(env1 == env2);  // modulo generated keys, absent here

  auto tags = planned_image_tags(p1);
  CHECK(std::find(tags.begin(), tags.end(), "target-toyproj:base") !=
        tags.end());
  CHECK(std::find(tags.begin(), tags.end(), "toyfuzz-builder:build") !=
        tags.end());
  CHECK(std::find(tags.begin(), tags.end(), "toyfuzz-fuzzer:run") !=
        tags.end());
  CHECK(planned_networks(p1) ==
        std::vector<std::string>{"net-toyfuzz", "net-toyfix"});
}

TEST_CASE("phase monotonicity: out-of-order operations fail cleanly") {
  TempDir tmp("lifecycle");
  ValidatedPlan plan = toy_plan(tmp / "out");
  Campaign campaign(plan, mock_options(tmp / "out"));
  CHECK(campaign.phase() == Phase::kNew);

  CHECK_THROWS_WITH_AS(campaign.run(),
                       doctest::Contains("phase is 'new', expected 'built'"),
                       PhaseError);
  CHECK_THROWS_AS(campaign.build_target(), PhaseError);
  CHECK(campaign.phase() == Phase::kNew);  // no side effects
  CHECK_FALSE(fs::exists(tmp / "out" / "campaign-report.json"));
}

TEST_CASE("seed_initial_inputs: dedup, SARIF gate, diff ingestion") {
  TempDir tmp("seed");
  ExchangeStore store(tmp / "exchange");
  store.open();

  InitialInputsConfig inputs;
  inputs.corpus_dir = fixtures_dir() / "inputs" / "corpus";
  inputs.diff_file = fixtures_dir() / "inputs" / "ref.diff";
  inputs.sarif_file = fixtures_dir() / "inputs" / "minimal.sarif";
  SeedCounts counts = seed_initial_inputs(inputs, store);
  CHECK(counts.seeds == 2);  // 3 files, 2 identical
  CHECK(counts.diffs == 1);
  CHECK(counts.bug_candidates == 1);
  CHECK(store.counts_by_dir().at("seeds") == 2);
  CHECK(store.counts_by_dir().at("diffs") == 1);
  CHECK(store.counts_by_dir().at("bug-candidates") == 1);

  // The diff is visible in every fetch dir after a sync.
  fs::path fetch_a = tmp / "fetch-a";
  fs::path fetch_b = tmp / "fetch-b";
  sync_once({{"a", Registration::Kind::kFetch, fetch_a, std::nullopt},
             {"b", Registration::Kind::kFetch, fetch_b, std::nullopt}},
            store);
  size_t diffs_a = 0;
  for (const auto& e : fs::directory_iterator(fetch_a / "diffs"))
    if (e.is_regular_file()) ++diffs_a;
  CHECK(diffs_a == 1);
  CHECK(fs::exists(fetch_b / "diffs"));

  InitialInputsConfig bad;
  bad.sarif_file = fixtures_dir() / "inputs" / "bad-noruns.sarif";
  CHECK_THROWS_AS(seed_initial_inputs(bad, store), ConfigError);
}

TEST_CASE("full toy campaign: prepare, build-target, run") {
  TempDir tmp("campaign");
  fs::path out = tmp / "out";
  ValidatedPlan plan = toy_plan(out);
  CampaignOptions options = mock_options(out);
  Campaign campaign(plan, options);

  campaign.prepare();
  CHECK(campaign.phase() == Phase::kPrepared);

  // Re-running prepare is a cache hit (no prepare images here, so a no-op).
  campaign.prepare();
  CHECK(campaign.phase() == Phase::kPrepared);

  campaign.build_target();
  CHECK(campaign.phase() == Phase::kBuilt);
  // The fuzzer CRS published its harness via submit-build-output.
  CHECK(fs::exists(out / "build-outputs" / "toyfuzz" / "out" / "app_fuzzer"));
  // The compiled-target snapshot exists for the bug-fixing CRS.
  CHECK(options.runtime->image_exists("target-toyproj:compiled"));

  CampaignReport report = campaign.run();
  CHECK(campaign.phase() == Phase::kFinished);
  CHECK(report.infrastructure_ok);
  CHECK(report.exchange_total("povs") >= 1);
  CHECK(report.exchange_total("patches") >= 1);
  CHECK(report.exchange_total("seeds") >= 1);

  const BuilderStats& stats = report.builder_stats.at("toyfix");
  CHECK(stats.builds_ok >= 1);
  CHECK(stats.pov_no_crash >= 1);
  CHECK(stats.tests_passed >= 1);

  // Every container ran to a clean exit.
  for (const auto& [crs, outcomes] : report.containers)
    for (const auto& o : outcomes) {
      CHECK(o.state == "exited");
      CHECK(o.exit_code == 0);
    }

  // Artifacts written where the spec pins them.
  CHECK(fs::exists(out / "campaign-report.json"));
  CHECK(fs::exists(out / "env-transcript.json"));
  CHECK(fs::exists(out / "exchange" / "index.jsonl"));
  CHECK(fs::exists(out / "state.json"));

  // PoVs are mirrored into both CRS fetch dirs.
  auto pov_count = [&](const std::string& crs) {
    size_t n = 0;
    fs::path dir = out / "crs" / crs / "fetch" / "povs";
    if (fs::is_directory(dir))
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) ++n;
    return n;
  };
  CHECK(pov_count("toyfuzz") >= 1);
  CHECK(pov_count("toyfix") >= 1);
}

TEST_CASE("timeout stops a lingering campaign at about the deadline") {
  TempDir tmp("campaign");
  fs::path out = tmp / "out";
  ComposeConfig compose =
      parse_compose_file(fixtures_dir() / "compose" / "compose-linger.yaml");
  compose.out_dir = out;
  compose.run_timeout = std::chrono::seconds(2);
  std::vector<CrsManifest> manifests;
  for (const auto& entry : compose.crs_entries)
    manifests.push_back(parse_manifest_file(
        resolve_manifest_path(compose.base_dir, entry.crs_ref)));
  auto result = validate_campaign(compose, manifests, big_host());
  REQUIRE(result.ok());

  Campaign campaign(*result.plan, mock_options(out));
  campaign.prepare();
  campaign.build_target();
  auto t0 = std::chrono::steady_clock::now();
  CampaignReport report = campaign.run();
  auto wall = std::chrono::steady_clock::now() - t0;

  CHECK(report.stop_reason == "timeout");
  CHECK(wall >= 2s);
  CHECK(wall < 10s);  // deadline plus teardown slack
  // Artifacts submitted before the deadline made it into the report.
  CHECK(report.exchange_total("seeds") == 3);
}

TEST_CASE("manual termination finishes the campaign promptly") {
  TempDir tmp("campaign");
  fs::path out = tmp / "out";
  ComposeConfig compose =
      parse_compose_file(fixtures_dir() / "compose" / "compose-linger.yaml");
  compose.out_dir = out;
  std::vector<CrsManifest> manifests;
  for (const auto& entry : compose.crs_entries)
    manifests.push_back(parse_manifest_file(
        resolve_manifest_path(compose.base_dir, entry.crs_ref)));
  auto result = validate_campaign(compose, manifests, big_host());
  REQUIRE(result.ok());

  Campaign campaign(*result.plan, mock_options(out));
  campaign.prepare();
  campaign.build_target();

  CampaignReport report;
  std::thread runner([&] { report = campaign.run(); });
  // Let the lingering CRSs start, then terminate manually.
  std::this_thread::sleep_for(1500ms);
  campaign.request_stop();
  runner.join();

  CHECK(campaign.phase() == Phase::kFinished);
  CHECK(report.stop_reason == "manual");
  for (const auto& [crs, outcomes] : report.containers)
    for (const auto& o : outcomes) CHECK(o.state == "killed");
  // Each linger CRS submitted its hello seed before termination.
  CHECK(report.exchange_total("seeds") == 3);
}
