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

#ifndef OSS_CRS_UTIL_HPP_
#define OSS_CRS_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace oss_crs {

namespace fs = std::filesystem;

// Base error for all framework failures that carry a human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

// Writes to a sibling temp file, then renames into place. Never leaves a
// partial file at `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);

void ensure_dir(const fs::path& dir);

// Recursive copy preserving permissions; symlinks are copied as symlinks.
void copy_tree(const fs::path& from, const fs::path& to);

std::string hex_encode(const unsigned char* data, size_t len);

// `n` bytes from the system entropy source, hex-encoded (2n chars).
std::string random_token(size_t n_bytes);

int64_t unix_millis();
std::string iso8601_now();

std::string to_lower(std::string s);
std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

// True when `p` is lexically inside (or equal to) `root` after normalization.
bool path_within(const fs::path& p, const fs::path& root);

}  // namespace oss_crs

#endif  // OSS_CRS_UTIL_HPP_
