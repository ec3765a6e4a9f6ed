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

#ifndef OSS_CRS_SHA256_HPP_
#define OSS_CRS_SHA256_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace oss_crs {

// 64-char lowercase hex SHA-256 digest of `bytes`.
std::string content_hash(std::string_view bytes);

std::string content_hash_file(const std::filesystem::path& path);

}  // namespace oss_crs

#endif  // OSS_CRS_SHA256_HPP_
