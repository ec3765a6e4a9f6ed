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

#ifndef OSS_CRS_UNIDIFF_HPP_
#define OSS_CRS_UNIDIFF_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace oss_crs {

struct DiffLine {
  char tag;  // ' ', '-', '+'
  std::string text;
};

struct DiffHunk {
  long old_start = 0;
  long old_count = 0;
  long new_start = 0;
  long new_count = 0;
  std::vector<DiffLine> lines;
};

struct FilePatch {
  std::string old_path;  // "/dev/null" for creations
  std::string new_path;  // "/dev/null" for deletions
  std::vector<DiffHunk> hunks;
  bool new_ends_without_newline = false;
};

struct UnifiedDiff {
  std::vector<FilePatch> files;
};

// Throws ConfigError on malformed input. Git-style preamble lines
// ("diff --git", "index ...") are tolerated and skipped.
UnifiedDiff parse_unified_diff(const std::string& text);

struct PatchOutcome {
  bool ok = false;
  bool conflict = false;
  std::string detail;
  int strip_used = -1;
};

// Applies `diff` to files under `root` with exact context matching (no fuzz,
// no offset search). Hunk paths are tried at strip=1 then strip=0; the first
// level where every file applies cleanly wins, anything else is a conflict.
// All-or-nothing: on conflict no file under `root` is modified.
PatchOutcome apply_unified_diff(const std::filesystem::path& root,
                                const UnifiedDiff& diff);

}  // namespace oss_crs

#endif  // OSS_CRS_UNIDIFF_HPP_
