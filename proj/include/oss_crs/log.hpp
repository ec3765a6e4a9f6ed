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

#ifndef OSS_CRS_LOG_HPP_
#define OSS_CRS_LOG_HPP_

#include <atomic>
#include <cstdio>
#include <string>

namespace oss_crs {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

inline std::atomic<int>& log_threshold() {
  static std::atomic<int> level{static_cast<int>(LogLevel::kInfo)};
  return level;
}

inline void set_log_level(LogLevel level) {
  log_threshold().store(static_cast<int>(level));
}

inline void log_at(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) < log_threshold().load()) return;
  static const char* kNames[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  std::fprintf(stderr, "[oss-crs %s] %s\n",
               kNames[static_cast<int>(level)], msg.c_str());
}

inline void log_debug(const std::string& msg) {
  log_at(LogLevel::kDebug, msg);
}
inline void log_info(const std::string& msg) { log_at(LogLevel::kInfo, msg); }
inline void log_warn(const std::string& msg) { log_at(LogLevel::kWarn, msg); }
inline void log_error(const std::string& msg) {
  log_at(LogLevel::kError, msg);
}

}  // namespace oss_crs

#endif  // OSS_CRS_LOG_HPP_
