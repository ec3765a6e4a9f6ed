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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "oss_crs/unidiff.hpp"
#include "oss_crs/util.hpp"
#include "support/test_util.hpp"

using namespace oss_crs;
using namespace oss_crs_test;

TEST_CASE("parses a plain unified diff") {
  std::string diff =
      "--- a/f.txt\n"
      "+++ b/f.txt\n"
      "@@ -1,3 +1,3 @@\n"
      " one\n"
      "-two\n"
      "+TWO\n"
      " three\n";
  UnifiedDiff d = parse_unified_diff(diff);
  REQUIRE(d.files.size() == 1);
  CHECK(d.files[0].old_path == "a/f.txt");
  CHECK(d.files[0].new_path == "b/f.txt");
  REQUIRE(d.files[0].hunks.size() == 1);
  CHECK(d.files[0].hunks[0].old_start == 1);
  CHECK(d.files[0].hunks[0].lines.size() == 4);
}

TEST_CASE("tolerates git preamble lines") {
  std::string diff =
      "diff --git a/f.txt b/f.txt\n"
      "index 0000000..1111111 100644\n"
      "--- a/f.txt\n"
      "+++ b/f.txt\n"
      "@@ -1 +1 @@\n"
      "-x\n"
      "+y\n";
  UnifiedDiff d = parse_unified_diff(diff);
  CHECK(d.files.size() == 1);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_unified_diff(""), ConfigError);
  CHECK_THROWS_AS(parse_unified_diff("random text, not a diff\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_unified_diff("--- a/f\nno plus header\n"),
                  ConfigError);
  // Counts that disagree with the body.
  CHECK_THROWS_AS(parse_unified_diff("--- a/f\n+++ b/f\n@@ -1,5 +1,5 @@\n"
                                     " only-one-line\n"),
                  ConfigError);
}

TEST_CASE("applies cleanly at strip=1") {
  TempDir tmp("unidiff");
  write_file(tmp / "f.txt", "one\ntwo\nthree\n");
  std::string diff =
      "--- a/f.txt\n"
      "+++ b/f.txt\n"
      "@@ -1,3 +1,3 @@\n"
      " one\n"
      "-two\n"
      "+TWO\n"
      " three\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK(out.ok);
  CHECK(out.strip_used == 1);
  CHECK(slurp(tmp / "f.txt") == "one\nTWO\nthree\n");
}

TEST_CASE("falls back to strip=0 when paths are not prefixed") {
  TempDir tmp("unidiff");
  write_file(tmp / "plain.txt", "alpha\n");
  std::string diff =
      "--- plain.txt\n"
      "+++ plain.txt\n"
      "@@ -1 +1 @@\n"
      "-alpha\n"
      "+beta\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK(out.ok);
  CHECK(out.strip_used == 0);
  CHECK(slurp(tmp / "plain.txt") == "beta\n");
}

TEST_CASE("stale context is a conflict and leaves files untouched") {
  TempDir tmp("unidiff");
  write_file(tmp / "f.txt", "one\nCHANGED\nthree\n");
  std::string diff =
      "--- a/f.txt\n"
      "+++ b/f.txt\n"
      "@@ -1,3 +1,3 @@\n"
      " one\n"
      "-two\n"
      "+TWO\n"
      " three\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK_FALSE(out.ok);
  CHECK(out.conflict);
  CHECK(out.detail.find("context mismatch") != std::string::npos);
  CHECK(slurp(tmp / "f.txt") == "one\nCHANGED\nthree\n");
}

TEST_CASE("missing file is a conflict") {
  TempDir tmp("unidiff");
  std::string diff =
      "--- a/absent.txt\n"
      "+++ b/absent.txt\n"
      "@@ -1 +1 @@\n"
      "-x\n"
      "+y\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK(out.conflict);
  CHECK(out.detail.find("missing file") != std::string::npos);
}

TEST_CASE("multi-file patches are all-or-nothing") {
  TempDir tmp("unidiff");
  write_file(tmp / "good.txt", "keep\n");
  write_file(tmp / "bad.txt", "unexpected\n");
  std::string diff =
      "--- a/good.txt\n"
      "+++ b/good.txt\n"
      "@@ -1 +1 @@\n"
      "-keep\n"
      "+kept\n"
      "--- a/bad.txt\n"
      "+++ b/bad.txt\n"
      "@@ -1 +1 @@\n"
      "-expected\n"
      "+other\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK(out.conflict);
  CHECK(slurp(tmp / "good.txt") == "keep\n");  // first file not committed
}

TEST_CASE("file creation and deletion") {
  TempDir tmp("unidiff");
  std::string create =
      "--- /dev/null\n"
      "+++ b/new.txt\n"
      "@@ -0,0 +1,2 @@\n"
      "+hello\n"
      "+world\n";
  PatchOutcome out = apply_unified_diff(tmp.path(),
                                        parse_unified_diff(create));
  CHECK(out.ok);
  CHECK(slurp(tmp / "new.txt") == "hello\nworld\n");

  std::string remove =
      "--- a/new.txt\n"
      "+++ /dev/null\n"
      "@@ -1,2 +0,0 @@\n"
      "-hello\n"
      "-world\n";
  out = apply_unified_diff(tmp.path(), parse_unified_diff(remove));
  CHECK(out.ok);
  CHECK_FALSE(fs::exists(tmp / "new.txt"));
}

TEST_CASE("no-newline-at-eof marker is honored") {
  TempDir tmp("unidiff");
  write_file(tmp / "f.txt", "line\n");
  std::string diff =
      "--- a/f.txt\n"
      "+++ b/f.txt\n"
      "@@ -1 +1 @@\n"
      "-line\n"
      "+line without newline\n"
      "\\ No newline at end of file\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK(out.ok);
  CHECK(slurp(tmp / "f.txt") == "line without newline");
}

TEST_CASE("paths escaping the root are rejected") {
  TempDir tmp("unidiff");
  std::string diff =
      "--- a/../../etc/passwd\n"
      "+++ b/../../etc/passwd\n"
      "@@ -1 +1 @@\n"
      "-x\n"
      "+y\n";
  PatchOutcome out = apply_unified_diff(tmp.path(), parse_unified_diff(diff));
  CHECK(out.conflict);
}

TEST_CASE("fixture patches behave as designed against the toy source") {
  fs::path src = fixtures_dir() / "toy-target" / "src";
  auto fresh_copy = [&](const fs::path& dest) {
    fs::create_directories(dest);
    for (const auto& e : fs::directory_iterator(src))
      fs::copy_file(e.path(), dest / e.path().filename());
  };

  TempDir t1("patch");
  fresh_copy(t1.path());
  std::string correct = slurp(fixtures_dir() / "patches" / "correct.diff");
  CHECK(apply_unified_diff(t1.path(), parse_unified_diff(correct)).ok);
  CHECK(slurp(t1 / "check.sh").find("CRASHME") == std::string::npos);

  TempDir t2("patch");
  fresh_copy(t2.path());
  std::string conflicting =
      slurp(fixtures_dir() / "patches" / "conflicting.diff");
  CHECK(apply_unified_diff(t2.path(),
                           parse_unified_diff(conflicting)).conflict);

  TempDir t3("patch");
  fresh_copy(t3.path());
  std::string nonfixing =
      slurp(fixtures_dir() / "patches" / "nonfixing.diff");
  CHECK(apply_unified_diff(t3.path(), parse_unified_diff(nonfixing)).ok);
  CHECK(slurp(t3 / "check.sh").find("CRASHME") != std::string::npos);

  TempDir t4("patch");
  fresh_copy(t4.path());
  std::string regressing =
      slurp(fixtures_dir() / "patches" / "regressing.diff");
  CHECK(apply_unified_diff(t4.path(), parse_unified_diff(regressing)).ok);
  CHECK(slurp(t4 / "check.sh").find("echo \"ok\"") != std::string::npos);
}
