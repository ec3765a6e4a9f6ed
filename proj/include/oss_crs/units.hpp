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

#ifndef OSS_CRS_UNITS_HPP_
#define OSS_CRS_UNITS_HPP_

#include <chrono>
#include <cstdint>
#include <string>

namespace oss_crs {

// Byte counts accept K/M/G suffixes (base 1024, case-insensitive); a bare
// integer is bytes. "16G" -> 17179869184.
int64_t parse_memory_bytes(const std::string& text);

// Durations accept s/m/h suffixes; a bare integer is seconds.
std::chrono::milliseconds parse_duration(const std::string& text);

std::string format_duration_secs(std::chrono::milliseconds d);

}  // namespace oss_crs

#endif  // OSS_CRS_UNITS_HPP_
