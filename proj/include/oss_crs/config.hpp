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

#ifndef OSS_CRS_CONFIG_HPP_
#define OSS_CRS_CONFIG_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oss_crs/cpuset.hpp"
#include "oss_crs/money.hpp"

namespace oss_crs {

namespace fs = std::filesystem;

enum class CrsType { kBugFinding, kBugFixing };
enum class Language { kC, kCpp, kJava };

std::string to_string(CrsType t);
std::string to_string(Language l);

// prepare_phase entry: a target-independent CRS image.
struct ImageBuildStep {
  std::string name;
  std::string dockerfile;
  std::string context = ".";
  std::map<std::string, std::string> build_args;
};

// target_build_phase entry: a builder image receiving the target base image
// as build arg TARGET_BASE_IMAGE, then run to completion.
struct TargetBuildStep {
  std::string name;
  std::string dockerfile;
  std::string context = ".";
  std::vector<std::string> entrypoint;  // empty: use the image's entrypoint
};

enum class MountKind { kFetch, kBuildOutputs, kShared };

struct RunContainerSpec {
  std::string dockerfile;
  std::string context = ".";
  std::vector<std::string> entrypoint;  // empty: use the image's entrypoint
  std::set<MountKind> mounts;           // defaults to all three
};

// Parsed crs.yaml.
struct CrsManifest {
  std::string name;
  CrsType crs_type = CrsType::kBugFinding;
  std::set<Language> languages;
  std::vector<std::string> required_llms;  // declaration order
  std::vector<ImageBuildStep> prepare_phase;
  std::vector<TargetBuildStep> target_build_phase;
  std::vector<std::pair<std::string, RunContainerSpec>> crs_run_phase;
  fs::path base_dir;  // directory of the manifest file; "." when from text
};

struct TargetRef {
  std::string project;
  fs::path source_dir;
  std::string harness;
  std::optional<Language> language;
  std::string build_command = "sh /src/build.sh";
  std::string source_root = "/src";
  std::string test_command;  // empty: target declares no regression tests
};

struct CrsDeployment {
  std::string crs_ref;  // manifest path or name, resolved by the caller
  CpuSet cpuset;
  int64_t memory_limit = 0;   // bytes
  std::string memory_text;    // original suffix form, e.g. "16G"
  std::optional<Cents> llm_budget;
};

enum class LlmMode { kInternal, kExternal, kDisabled };

std::string to_string(LlmMode m);

struct ModelRoute {
  std::string alias;           // `model_name`: what CRSs request
  std::string provider_model;  // concrete upstream model identifier
  std::string endpoint;        // upstream API base URL
  std::string credential_ref;  // env var holding the upstream key
  MicroDollars price_in = 0;   // dollars per 1M prompt tokens
  MicroDollars price_out = 0;  // dollars per 1M completion tokens
};

struct LlmSettings {
  LlmMode mode = LlmMode::kDisabled;
  std::vector<ModelRoute> model_routes;
  std::string external_endpoint;
  std::string external_key;      // literal key (discouraged)
  std::string external_key_env;  // env var indirection
};

struct InitialInputsConfig {
  std::optional<fs::path> corpus_dir;
  std::optional<fs::path> diff_file;
  std::optional<fs::path> sarif_file;
};

// Parsed crs-compose.yaml.
struct ComposeConfig {
  TargetRef target;
  std::vector<CrsDeployment> crs_entries;
  LlmSettings llm;
  std::optional<std::chrono::milliseconds> run_timeout;
  fs::path out_dir = "oss-crs-out";
  std::optional<InitialInputsConfig> initial_inputs;
  fs::path base_dir;  // directory of the compose file
};

// Parsers throw ConfigError with a precise location hint. Unknown keys are
// hard errors at every mapping level.
CrsManifest parse_manifest(const std::string& document);
CrsManifest parse_manifest_file(const fs::path& path);

ComposeConfig parse_compose(const std::string& document);
ComposeConfig parse_compose_file(const fs::path& path);

// Standalone proxy route file: top-level `model_list` of route entries.
std::vector<ModelRoute> parse_model_routes_file(const fs::path& path);

// Resolves a compose `crses[].name` to a manifest file. Tries, relative to
// `base_dir`: the value as a path (when it looks like one), `<name>/crs.yaml`,
// then `crses/<name>/crs.yaml`.
fs::path resolve_manifest_path(const fs::path& base_dir,
                               const std::string& crs_ref);

}  // namespace oss_crs

#endif  // OSS_CRS_CONFIG_HPP_
