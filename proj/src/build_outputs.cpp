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

#include "oss_crs/build_outputs.hpp"

#include "json.hpp"
#include "oss_crs/sha256.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

BuildOutputStore::PublishResult BuildOutputStore::publish(
    const std::string& name, const fs::path& src_dir) {
  if (name.empty() || name.find('/') != std::string::npos)
    throw Error("build outputs: invalid output name '" + name + "'");
  if (exists(name))
    throw Error("build outputs: '" + name + "' was already published");
  if (!fs::is_directory(src_dir))
    throw Error("build outputs: source dir missing: " + src_dir.string());

  PublishResult result;
  fs::path staging = root_ / (".staging-" + name + "-" + random_token(4));
  fs::create_directories(staging);
  nlohmann::json files = nlohmann::json::array();
  for (const auto& entry : fs::recursive_directory_iterator(
           src_dir, fs::directory_options::skip_permission_denied)) {
    if (!entry.is_regular_file()) continue;
    fs::path rel = entry.path().lexically_relative(src_dir);
    fs::path dst = staging / rel;
    try {
      if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
      fs::copy_file(entry.path(), dst);
      files.push_back({{"path", rel.string()},
                       {"size", fs::file_size(dst)},
                       {"sha256", content_hash_file(dst)}});
      ++result.files;
    } catch (const std::exception&) {
      ++result.warnings;
    }
  }

  std::error_code ec;
  fs::rename(staging, entry_dir(name), ec);
  if (ec) {
    fs::remove_all(staging);
    throw Error("build outputs: commit failed for '" + name +
                "': " + ec.message());
  }
  nlohmann::json manifest = {{"name", name},
                             {"files", files},
                             {"published_ms", unix_millis()}};
  write_file_atomic(manifest_path(name), manifest.dump(2) + "\n");
  return result;
}

bool BuildOutputStore::exists(const std::string& name) const {
  return fs::exists(entry_dir(name)) || fs::exists(manifest_path(name));
}

std::vector<std::string> BuildOutputStore::names() const {
  std::vector<std::string> out;
  if (!fs::is_directory(root_)) return out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    std::string name = entry.path().filename().string();
    if (name.rfind('.', 0) == 0) continue;  // .manifests, .staging-*
    out.push_back(name);
  }
  return out;
}

}  // namespace oss_crs
