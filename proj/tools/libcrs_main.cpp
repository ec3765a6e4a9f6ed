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

// libcrs: the in-container client command suite. Every subcommand is a pure
// function of the documented environment contract (OSS_CRS_* variables), the
// mounted directories, and the builder sidecar API.
//
// Exit codes: 0 success/positive result, 1 negative result, 64 usage error,
// 69 infrastructure unavailable.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "oss_crs/build_outputs.hpp"
#include "oss_crs/builder.hpp"
#include "oss_crs/control.hpp"
#include "oss_crs/exchange.hpp"
#include "oss_crs/sha256.hpp"
#include "oss_crs/util.hpp"

namespace {

using namespace oss_crs;

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 64;
constexpr int kUnavailable = 69;

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

std::string require_env(const char* name) {
  std::string v = env_or_empty(name);
  if (v.empty()) {
    std::fprintf(stderr, "libcrs: %s is not set; run inside a managed "
                         "container\n",
                 name);
    std::exit(kUnavailable);
  }
  return v;
}

// A registered dir must live inside a framework-visible mount.
bool dir_inside_mounts(const fs::path& dir) {
  const char* roots[] = {"OSS_CRS_CONTROL_DIR", "OSS_CRS_SHARED_DIR",
                         "OSS_CRS_FETCH_DIR", "OSS_CRS_BUILD_OUTPUT_DIR",
                         "OSS_CRS_MOCK_SANDBOX"};
  for (const char* root : roots) {
    std::string value = env_or_empty(root);
    if (!value.empty() && path_within(dir, value)) return true;
  }
  return false;
}

ArtifactType parse_type_or_exit(const std::string& text) {
  auto type = artifact_type_from_name(text);
  if (!type) {
    std::fprintf(stderr,
                 "libcrs: unknown artifact type '%s' (expected seed, pov, "
                 "patch, bug-candidate, or diff)\n",
                 text.c_str());
    std::exit(kUsage);
  }
  return *type;
}

int cmd_submit_build_output(const std::string& name, const fs::path& dir) {
  fs::path store_root = require_env("OSS_CRS_BUILD_OUTPUT_DIR");
  if (!fs::is_directory(dir)) {
    std::fprintf(stderr, "libcrs: directory not found: %s\n",
                 dir.c_str());
    return kNegative;
  }
  BuildOutputStore store(store_root);
  try {
    auto result = store.publish(name, dir);
    std::printf("published %llu files as '%s'",
                static_cast<unsigned long long>(result.files), name.c_str());
    if (result.files == 0 || result.warnings > 0)
      std::printf(" (warnings: %llu)",
                  static_cast<unsigned long long>(
                      result.warnings + (result.files == 0 ? 1 : 0)));
    std::printf("\n");
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kNegative;
  }
  std::string control = env_or_empty("OSS_CRS_CONTROL_DIR");
  if (!control.empty()) {
    ControlRecord rec;
    rec.kind = ControlRecord::Kind::kBuildOutput;
    rec.dir = (store_root / name).string();
    rec.crs_name = env_or_empty("OSS_CRS_NAME");
    append_control_record(control, rec);
  }
  return kOk;
}

int cmd_register(ControlRecord::Kind kind,
                 std::optional<ArtifactType> artifact_type,
                 const fs::path& dir) {
  std::string control = require_env("OSS_CRS_CONTROL_DIR");
  fs::path normalized = fs::absolute(dir).lexically_normal();
  if (!dir_inside_mounts(normalized)) {
    std::fprintf(stderr,
                 "libcrs: %s is outside the framework-visible mounts\n",
                 normalized.c_str());
    return kUsage;
  }
  fs::create_directories(normalized);
  ControlRecord rec;
  rec.kind = kind;
  rec.dir = normalized.string();
  rec.artifact_type = artifact_type;
  rec.crs_name = env_or_empty("OSS_CRS_NAME");
  bool added = append_control_record(control, rec);
  std::printf("%s %s (%s)\n", added ? "registered" : "already-registered",
              normalized.c_str(), control_kind_name(kind).c_str());
  return kOk;
}

int cmd_submit(ArtifactType type, const fs::path& file) {
  std::string control = require_env("OSS_CRS_CONTROL_DIR");
  std::string bytes;
  try {
    bytes = read_file(file);
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kNegative;
  }
  std::string hash = content_hash(bytes);
  std::string type_dir = artifact_dir_name(type);

  fs::path oneshot = fs::path(control) / "oneshot" / type_dir / hash;
  std::string fetch = env_or_empty("OSS_CRS_FETCH_DIR");
  bool seen = fs::exists(oneshot) ||
              (!fetch.empty() && fs::exists(fs::path(fetch) / type_dir / hash));
  if (seen) {
    std::printf("duplicate %s\n", hash.c_str());
    return kOk;
  }
  write_file_atomic(oneshot, bytes);
  std::printf("submitted %s\n", hash.c_str());
  return kOk;
}

int cmd_fetch(ArtifactType type, const fs::path& dest) {
  std::string fetch = require_env("OSS_CRS_FETCH_DIR");
  fs::path src = fs::path(fetch) / artifact_dir_name(type);
  fs::create_directories(dest);
  uint64_t count = 0;
  if (fs::is_directory(src)) {
    for (const auto& entry : fs::directory_iterator(src)) {
      if (!entry.is_regular_file()) continue;
      fs::copy_file(entry.path(), dest / entry.path().filename(),
                    fs::copy_options::overwrite_existing);
      ++count;
    }
  }
  std::printf("%llu\n", static_cast<unsigned long long>(count));
  return kOk;
}

// The builder ref of the most recent successful patch-build; lets run-pov
// and run-test default to the build under validation.
fs::path last_build_file() {
  return fs::path(require_env("OSS_CRS_CONTROL_DIR")) / "last-build";
}

std::string default_build_ref() {
  fs::path f = last_build_file();
  if (fs::exists(f)) {
    std::string ref = trim(read_file(f));
    if (!ref.empty()) return ref;
  }
  return "baseline";
}

BuilderClient builder_client_or_exit() {
  std::string url = env_or_empty("OSS_CRS_BUILDER_URL");
  if (url.empty()) {
    std::fprintf(stderr, "libcrs: OSS_CRS_BUILDER_URL is not set (patch "
                         "validation is available to bug-fixing CRSs)\n");
    std::exit(kUnavailable);
  }
  return BuilderClient(url);
}

int cmd_apply_patch_build(const fs::path& diff_file) {
  std::string diff;
  try {
    diff = read_file(diff_file);
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kNegative;
  }
  BuilderClient client = builder_client_or_exit();
  BuilderClient::Response res;
  try {
    res = client.apply_patch_build(diff);
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kUnavailable;
  }
  std::printf("%s\n", res.body.c_str());
  nlohmann::json j = nlohmann::json::parse(res.body, nullptr, false);
  std::string status = j.is_discarded() ? "" : j.value("status", "");
  if (status == "ok") {
    write_file_atomic(last_build_file(), j.value("build", "") + "\n");
    return kOk;
  }
  return kNegative;
}

int cmd_run_pov(const fs::path& pov_file, const std::string& harness,
                const std::string& build_ref) {
  std::string pov;
  try {
    pov = read_file(pov_file);
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kNegative;
  }
  BuilderClient client = builder_client_or_exit();
  BuilderClient::Response res;
  try {
    res = client.run_pov(build_ref, pov, harness);
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kUnavailable;
  }
  std::printf("%s\n", res.body.c_str());
  nlohmann::json j = nlohmann::json::parse(res.body, nullptr, false);
  std::string status = j.is_discarded() ? "" : j.value("status", "");
  return status == "no_crash" ? kOk : kNegative;
}

int cmd_run_test(const std::string& build_ref) {
  BuilderClient client = builder_client_or_exit();
  BuilderClient::Response res;
  try {
    res = client.run_test(build_ref);
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kUnavailable;
  }
  std::printf("%s\n", res.body.c_str());
  nlohmann::json j = nlohmann::json::parse(res.body, nullptr, false);
  std::string status = j.is_discarded() ? "" : j.value("status", "");
  return status == "tests_passed" ? kOk : kNegative;
}

void usage() {
  std::fprintf(
      stderr,
      "usage: libcrs <command> [args]\n"
      "\n"
      "  submit-build-output <name> <dir>   publish build artifacts\n"
      "  register-submit-dir <type> <dir>   background submission dir\n"
      "  register-fetch-dir <dir>           background fetching dir\n"
      "  register-shared-dir <dir>          intra-CRS shared dir\n"
      "  submit <type> <file>               one-shot artifact submission\n"
      "  fetch <type> <dir>                 one-shot artifact fetch\n"
      "  apply-patch-build <diff>           apply patch and rebuild\n"
      "  run-pov <pov> <harness> [--build R]  run PoV against a build\n"
      "  run-test [--build R]               run regression tests\n"
      "\n"
      "types: seed pov patch bug-candidate diff\n");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    usage();
    return kUsage;
  }
  const std::string& cmd = args[0];

  // Optional --build flag for the patch-validation commands.
  std::string build_ref;
  for (size_t i = 1; i + 1 < args.size(); ++i) {
    if (args[i] == "--build") {
      build_ref = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i),
                 args.begin() + static_cast<long>(i) + 2);
      break;
    }
  }

  try {
    if (cmd == "submit-build-output") {
      if (args.size() != 3) {
        usage();
        return kUsage;
      }
      return cmd_submit_build_output(args[1], args[2]);
    }
    if (cmd == "register-submit-dir") {
      if (args.size() != 3) {
        usage();
        return kUsage;
      }
      return cmd_register(ControlRecord::Kind::kSubmit,
                          parse_type_or_exit(args[1]), args[2]);
    }
    if (cmd == "register-fetch-dir") {
      if (args.size() != 2) {
        usage();
        return kUsage;
      }
      return cmd_register(ControlRecord::Kind::kFetch, std::nullopt, args[1]);
    }
    if (cmd == "register-shared-dir") {
      if (args.size() != 2) {
        usage();
        return kUsage;
      }
      return cmd_register(ControlRecord::Kind::kShared, std::nullopt,
                          args[1]);
    }
    if (cmd == "submit") {
      if (args.size() != 3) {
        usage();
        return kUsage;
      }
      return cmd_submit(parse_type_or_exit(args[1]), args[2]);
    }
    if (cmd == "fetch") {
      if (args.size() != 3) {
        usage();
        return kUsage;
      }
      return cmd_fetch(parse_type_or_exit(args[1]), args[2]);
    }
    if (cmd == "apply-patch-build") {
      if (args.size() != 2) {
        usage();
        return kUsage;
      }
      return cmd_apply_patch_build(args[1]);
    }
    if (cmd == "run-pov") {
      if (args.size() != 3) {
        usage();
        return kUsage;
      }
      return cmd_run_pov(args[1], args[2],
                         build_ref.empty() ? default_build_ref() : build_ref);
    }
    if (cmd == "run-test") {
      if (args.size() != 1) {
        usage();
        return kUsage;
      }
      return cmd_run_test(build_ref.empty() ? default_build_ref()
                                            : build_ref);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "libcrs: %s\n", e.what());
    return kNegative;
  }
  usage();
  return kUsage;
}
