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

#ifndef OSS_CRS_BUILD_OUTPUTS_HPP_
#define OSS_CRS_BUILD_OUTPUTS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace oss_crs {

namespace fs = std::filesystem;

// Per-CRS store of build-phase artifacts, handed read-only to run-phase
// containers. One entry per published name; entries are immutable once
// committed (the manifest write is the commit point).
//
// Layout: <root>/<name>/... with <root>/.manifests/<name>.json holding the
// file list, sizes, and content hashes.
class BuildOutputStore {
 public:
  explicit BuildOutputStore(fs::path root) : root_(std::move(root)) {}

  struct PublishResult {
    uint64_t files = 0;
    uint64_t warnings = 0;  // unreadable entries skipped
  };

  // Copies `src_dir` under `name`. Throws Error when `name` already exists.
  PublishResult publish(const std::string& name, const fs::path& src_dir);

  bool exists(const std::string& name) const;
  std::vector<std::string> names() const;

  const fs::path& root() const { return root_; }
  fs::path entry_dir(const std::string& name) const { return root_ / name; }
  fs::path manifest_path(const std::string& name) const {
    return root_ / ".manifests" / (name + ".json");
  }

 private:
  fs::path root_;
};

}  // namespace oss_crs

#endif  // OSS_CRS_BUILD_OUTPUTS_HPP_
