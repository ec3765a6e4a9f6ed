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

#include "oss_crs/units.hpp"

#include <cctype>

#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

// Splits "<digits><suffix?>" and validates the digit part.
std::pair<int64_t, char> parse_number_suffix(const std::string& text,
                                             const char* what) {
  std::string s = trim(text);
  if (s.empty()) throw ConfigError(std::string(what) + ": empty value");
  char suffix = 0;
  if (!std::isdigit(static_cast<unsigned char>(s.back()))) {
    suffix = static_cast<char>(
        std::tolower(static_cast<unsigned char>(s.back())));
    s.pop_back();
  }
  if (s.empty()) throw ConfigError(std::string(what) + ": no digits: " + text);
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ConfigError(std::string(what) + ": malformed value: " + text);
  return {std::stoll(s), suffix};
}

}  // namespace

int64_t parse_memory_bytes(const std::string& text) {
  auto [value, suffix] = parse_number_suffix(text, "memory");
  switch (suffix) {
    case 0:
      return value;
    case 'k':
      return value * 1024LL;
    case 'm':
      return value * 1024LL * 1024;
    case 'g':
      return value * 1024LL * 1024 * 1024;
    default:
      throw ConfigError("memory: unknown suffix in '" + text +
                        "' (expected K/M/G)");
  }
}

std::chrono::milliseconds parse_duration(const std::string& text) {
  std::string s = trim(text);
  // Accept "250ms" as well; check the two-char suffix before the generic path.
  if (s.size() > 2 && s.substr(s.size() - 2) == "ms") {
    std::string digits = s.substr(0, s.size() - 2);
    for (char c : digits)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw ConfigError("duration: malformed value: " + text);
    return std::chrono::milliseconds(std::stoll(digits));
  }
  auto [value, suffix] = parse_number_suffix(text, "duration");
  switch (suffix) {
    case 0:
    case 's':
      return std::chrono::seconds(value);
    case 'm':
      return std::chrono::minutes(value);
    case 'h':
      return std::chrono::hours(value);
    default:
      throw ConfigError("duration: unknown suffix in '" + text +
                        "' (expected s/m/h)");
  }
}

std::string format_duration_secs(std::chrono::milliseconds d) {
  return std::to_string(d.count() / 1000) + "s";
}

}  // namespace oss_crs
