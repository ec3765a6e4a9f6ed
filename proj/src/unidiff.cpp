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

#include "oss_crs/unidiff.hpp"

#include <cstdio>
#include <optional>

#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

constexpr const char* kDevNull = "/dev/null";

// "path\ttimestamp" headers: the path ends at the first tab.
std::string header_path(const std::string& line, size_t prefix_len) {
  std::string rest = line.substr(prefix_len);
  size_t tab = rest.find('\t');
  if (tab != std::string::npos) rest = rest.substr(0, tab);
  return trim(rest);
}

bool parse_hunk_header(const std::string& line, DiffHunk* hunk) {
  long os = 0, oc = 1, ns = 0, nc = 1;
  int matched = std::sscanf(line.c_str(), "@@ -%ld,%ld +%ld,%ld @@", &os, &oc,
                            &ns, &nc);
  if (matched != 4) {
    oc = 1;
    nc = 1;
    matched = std::sscanf(line.c_str(), "@@ -%ld +%ld,%ld @@", &os, &ns, &nc);
    if (matched != 3) {
      nc = 1;
      matched = std::sscanf(line.c_str(), "@@ -%ld,%ld +%ld @@", &os, &oc, &ns);
      if (matched != 3) {
        matched = std::sscanf(line.c_str(), "@@ -%ld +%ld @@", &os, &ns);
        if (matched != 2) return false;
      }
    }
  }
  hunk->old_start = os;
  hunk->old_count = oc;
  hunk->new_start = ns;
  hunk->new_count = nc;
  return true;
}

struct Lines {
  std::vector<std::string> lines;
  bool trailing_newline = true;
};

Lines split_lines(const std::string& text) {
  Lines out;
  if (text.empty()) return out;
  size_t start = 0;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      out.lines.push_back(text.substr(start));
      out.trailing_newline = false;
      break;
    }
    out.lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::string join_lines(const Lines& l) {
  std::string out;
  for (size_t i = 0; i < l.lines.size(); ++i) {
    out += l.lines[i];
    if (i + 1 < l.lines.size() || l.trailing_newline) out += "\n";
  }
  return out;
}

// Drops the first `strip` components of a diff path. Returns nullopt when
// the path has too few components or escapes upward.
std::optional<std::string> strip_path(const std::string& path, int strip) {
  if (path == kDevNull) return std::string(kDevNull);
  std::vector<std::string> parts;
  for (const auto& p : split(path, '/'))
    if (!p.empty()) parts.push_back(p);
  if (static_cast<int>(parts.size()) <= strip) return std::nullopt;
  std::string out;
  for (size_t i = static_cast<size_t>(strip); i < parts.size(); ++i) {
    if (parts[i] == "..") return std::nullopt;
    if (!out.empty()) out += "/";
    out += parts[i];
  }
  return out;
}

struct PendingWrite {
  std::filesystem::path path;
  std::string content;
  bool remove = false;
};

// Applies one file patch against in-memory content. Returns conflict detail
// or empty string on success.
std::string apply_file_patch(const FilePatch& fp, Lines* content) {
  std::vector<std::string> out;
  size_t cursor = 0;  // index into old lines, 0-based
  for (size_t h = 0; h < fp.hunks.size(); ++h) {
    const DiffHunk& hunk = fp.hunks[h];
    size_t old_pos = hunk.old_start > 0
                         ? static_cast<size_t>(hunk.old_start - 1)
                         : 0;
    if (old_pos < cursor)
      return "hunk " + std::to_string(h + 1) + " overlaps previous hunk";
    if (old_pos > content->lines.size())
      return "hunk " + std::to_string(h + 1) + " starts beyond end of file";
    for (size_t i = cursor; i < old_pos; ++i) out.push_back(content->lines[i]);
    cursor = old_pos;
    for (const DiffLine& dl : hunk.lines) {
      switch (dl.tag) {
        case ' ':
        case '-':
          if (cursor >= content->lines.size() ||
              content->lines[cursor] != dl.text)
            return "context mismatch at line " + std::to_string(cursor + 1) +
                   " (expected '" + dl.text + "', found '" +
                   (cursor < content->lines.size() ? content->lines[cursor]
                                                   : "<eof>") +
                   "')";
          if (dl.tag == ' ') out.push_back(content->lines[cursor]);
          ++cursor;
          break;
        case '+':
          out.push_back(dl.text);
          break;
        default:
          return "unexpected diff line tag";
      }
    }
  }
  for (size_t i = cursor; i < content->lines.size(); ++i)
    out.push_back(content->lines[i]);
  content->lines = std::move(out);
  if (fp.new_ends_without_newline) content->trailing_newline = false;
  return "";
}

}  // namespace

UnifiedDiff parse_unified_diff(const std::string& text) {
  UnifiedDiff diff;
  Lines input = split_lines(text);
  size_t i = 0;
  const auto& L = input.lines;
  while (i < L.size()) {
    if (L[i].rfind("--- ", 0) != 0) {
      ++i;  // preamble ("diff --git", "index", mode lines) or trailing noise
      continue;
    }
    FilePatch fp;
    fp.old_path = header_path(L[i], 4);
    ++i;
    if (i >= L.size() || L[i].rfind("+++ ", 0) != 0)
      throw ConfigError("unified diff: '---' header without '+++' at line " +
                        std::to_string(i));
    fp.new_path = header_path(L[i], 4);
    ++i;
    while (i < L.size() && L[i].rfind("@@", 0) == 0) {
      DiffHunk hunk;
      if (!parse_hunk_header(L[i], &hunk))
        throw ConfigError("unified diff: malformed hunk header: " + L[i]);
      ++i;
      long seen_old = 0, seen_new = 0;
      while (i < L.size() && (seen_old < hunk.old_count ||
                              seen_new < hunk.new_count)) {
        const std::string& line = L[i];
        if (line.rfind("\\ No newline", 0) == 0) {
          if (!hunk.lines.empty() && hunk.lines.back().tag != '-')
            fp.new_ends_without_newline = true;
          ++i;
          continue;
        }
        char tag = line.empty() ? ' ' : line[0];
        if (tag != ' ' && tag != '-' && tag != '+')
          throw ConfigError("unified diff: unexpected line in hunk: " + line);
        std::string body = line.empty() ? "" : line.substr(1);
        hunk.lines.push_back({tag, body});
        if (tag == ' ') {
          ++seen_old;
          ++seen_new;
        } else if (tag == '-') {
          ++seen_old;
        } else {
          ++seen_new;
        }
        ++i;
      }
      if (seen_old != hunk.old_count || seen_new != hunk.new_count)
        throw ConfigError("unified diff: truncated hunk (counts disagree)");
      // Trailing no-newline marker for the last line of the hunk.
      if (i < L.size() && L[i].rfind("\\ No newline", 0) == 0) {
        if (!hunk.lines.empty() && hunk.lines.back().tag != '-')
          fp.new_ends_without_newline = true;
        ++i;
      }
      fp.hunks.push_back(std::move(hunk));
    }
    if (fp.hunks.empty())
      throw ConfigError("unified diff: file entry without hunks: " +
                        fp.old_path);
    diff.files.push_back(std::move(fp));
  }
  if (diff.files.empty())
    throw ConfigError("unified diff: no file patches found");
  return diff;
}

PatchOutcome apply_unified_diff(const std::filesystem::path& root,
                                const UnifiedDiff& diff) {
  PatchOutcome outcome;
  std::string first_failure;
  for (int strip : {1, 0}) {
    std::vector<PendingWrite> writes;
    std::string failure;
    for (const FilePatch& fp : diff.files) {
      bool creating = fp.old_path == kDevNull;
      bool deleting = fp.new_path == kDevNull;
      auto rel = strip_path(creating ? fp.new_path : fp.old_path, strip);
      if (!rel || *rel == kDevNull) {
        failure = "path '" + (creating ? fp.new_path : fp.old_path) +
                  "' unusable at strip=" + std::to_string(strip);
        break;
      }
      std::filesystem::path target = root / *rel;
      if (!path_within(target, root)) {
        failure = "path '" + *rel + "' escapes the source root";
        break;
      }
      Lines content;
      if (creating) {
        if (std::filesystem::exists(target)) {
          failure = "creation target already exists: " + *rel;
          break;
        }
      } else {
        if (!std::filesystem::is_regular_file(target)) {
          failure = "missing file: " + *rel;
          break;
        }
        content = split_lines(read_file(target));
      }
      std::string err = apply_file_patch(fp, &content);
      if (!err.empty()) {
        failure = *rel + ": " + err;
        break;
      }
      PendingWrite w;
      w.path = target;
      if (deleting && content.lines.empty()) {
        w.remove = true;
      } else {
        w.content = join_lines(content);
      }
      writes.push_back(std::move(w));
    }
    if (failure.empty()) {
      for (const PendingWrite& w : writes) {
        if (w.remove) {
          std::filesystem::remove(w.path);
        } else {
          write_file(w.path, w.content);
        }
      }
      outcome.ok = true;
      outcome.strip_used = strip;
      return outcome;
    }
    if (first_failure.empty())
      first_failure = "strip=" + std::to_string(strip) + ": " + failure;
  }
  outcome.conflict = true;
  outcome.detail = first_failure;
  return outcome;
}

}  // namespace oss_crs
