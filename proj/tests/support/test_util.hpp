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

#ifndef OSS_CRS_TESTS_SUPPORT_TEST_UTIL_HPP_
#define OSS_CRS_TESTS_SUPPORT_TEST_UTIL_HPP_

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace oss_crs_test {

namespace fs = std::filesystem;

#ifndef OSS_CRS_FIXTURES
#error "OSS_CRS_FIXTURES must be defined by the build"
#endif
#ifndef OSS_CRS_BIN_DIR
#error "OSS_CRS_BIN_DIR must be defined by the build"
#endif

inline fs::path fixtures_dir() { return fs::path(OSS_CRS_FIXTURES); }
inline fs::path bin_dir() { return fs::path(OSS_CRS_BIN_DIR); }

class TempDir {
 public:
  explicit TempDir(const std::string& label = "osscrs") {
    std::string tmpl =
        (fs::temp_directory_path() / (label + "-XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    char* result = mkdtemp(buf.data());
    path_ = result ? fs::path(result) : fs::path();
  }
  ~TempDir() {
    if (!path_.empty()) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& sub) const { return path_ / sub; }

 private:
  fs::path path_;
};

// Independent recursive directory comparison oracle: walks both trees and
// compares structure and file bytes directly. Intentionally separate from
// any digest logic in the library under test.
inline bool trees_identical(const fs::path& a, const fs::path& b,
                            std::string* why = nullptr) {
  auto set_why = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::map<std::string, fs::path> a_entries, b_entries;
  for (const auto& e : fs::recursive_directory_iterator(a))
    a_entries[e.path().lexically_relative(a).string()] = e.path();
  for (const auto& e : fs::recursive_directory_iterator(b))
    b_entries[e.path().lexically_relative(b).string()] = e.path();
  if (a_entries.size() != b_entries.size())
    return set_why("entry counts differ");
  for (const auto& [rel, pa] : a_entries) {
    auto it = b_entries.find(rel);
    if (it == b_entries.end()) return set_why("missing in b: " + rel);
    const fs::path& pb = it->second;
    bool a_dir = fs::is_directory(pa), b_dir = fs::is_directory(pb);
    if (a_dir != b_dir) return set_why("kind differs: " + rel);
    if (a_dir) continue;
    if (fs::is_symlink(pa) || fs::is_symlink(pb)) {
      if (!fs::is_symlink(pa) || !fs::is_symlink(pb))
        return set_why("symlink kind differs: " + rel);
      if (fs::read_symlink(pa) != fs::read_symlink(pb))
        return set_why("symlink target differs: " + rel);
      continue;
    }
    std::ifstream fa(pa, std::ios::binary), fb(pb, std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    if (ca != cb) return set_why("content differs: " + rel);
  }
  return true;
}

inline bool wait_until(const std::function<bool()>& predicate,
                       std::chrono::milliseconds timeout,
                       std::chrono::milliseconds step =
                           std::chrono::milliseconds(20)) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (predicate()) return true;
    std::this_thread::sleep_for(step);
  }
  return predicate();
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace oss_crs_test

#endif  // OSS_CRS_TESTS_SUPPORT_TEST_UTIL_HPP_
