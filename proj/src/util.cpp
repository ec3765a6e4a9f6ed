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

#include "oss_crs/util.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace oss_crs {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write: " + path.string());
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + random_token(4);
  write_file(tmp, bytes);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("rename failed for " + path.string() + ": " + ec.message());
  }
}

void ensure_dir(const fs::path& dir) { fs::create_directories(dir); }

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  for (const auto& entry : fs::recursive_directory_iterator(
           from, fs::directory_options::skip_permission_denied)) {
    // Lexical relativization: fs::relative() resolves symlinks, which would
    // corrupt trees that contain them.
    const fs::path rel = entry.path().lexically_relative(from);
    const fs::path dst = to / rel;
    if (entry.is_symlink()) {
      std::error_code ec;
      fs::remove(dst, ec);
      fs::create_symlink(fs::read_symlink(entry.path()), dst);
    } else if (entry.is_directory()) {
      fs::create_directories(dst);
    } else if (entry.is_regular_file()) {
      fs::copy_file(entry.path(), dst, fs::copy_options::overwrite_existing);
    }
    // Sockets, fifos etc. are skipped.
  }
}

std::string hex_encode(const unsigned char* data, size_t len) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (size_t i = 0; i < len; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0xf]);
  }
  return out;
}

std::string random_token(size_t n_bytes) {
  std::vector<unsigned char> buf(n_bytes);
  std::FILE* f = std::fopen("/dev/urandom", "rb");
  if (f) {
    size_t got = std::fread(buf.data(), 1, n_bytes, f);
    std::fclose(f);
    if (got == n_bytes) return hex_encode(buf.data(), buf.size());
  }
  std::random_device rd;
  for (auto& b : buf) b = static_cast<unsigned char>(rd());
  return hex_encode(buf.data(), buf.size());
}

int64_t unix_millis() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

std::string iso8601_now() {
  using namespace std::chrono;
  auto now = system_clock::now();
  std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool path_within(const fs::path& p, const fs::path& root) {
  fs::path np = p.lexically_normal();
  fs::path nr = root.lexically_normal();
  auto it = nr.begin();
  auto jt = np.begin();
  for (; it != nr.end(); ++it, ++jt) {
    if (it->empty()) continue;  // trailing slash artifact
    if (jt == np.end() || *jt != *it) return false;
  }
  return true;
}

}  // namespace oss_crs
