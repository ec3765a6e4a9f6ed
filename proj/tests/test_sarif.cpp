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
#include "oss_crs/sarif.hpp"
#include "support/test_util.hpp"

using namespace oss_crs;
using namespace oss_crs_test;

TEST_CASE("minimal SARIF fixture passes structural validation") {
  SarifCheck check =
      validate_sarif(slurp(fixtures_dir() / "inputs" / "minimal.sarif"));
  CHECK(check.valid);
  CHECK(check.run_count == 1);
}

TEST_CASE("SARIF without runs is rejected") {
  SarifCheck check =
      validate_sarif(slurp(fixtures_dir() / "inputs" / "bad-noruns.sarif"));
  CHECK_FALSE(check.valid);
  CHECK(check.error.find("runs") != std::string::npos);
}

TEST_CASE("structural failure modes") {
  CHECK_FALSE(validate_sarif("not json at all").valid);
  CHECK_FALSE(validate_sarif("[]").valid);
  CHECK_FALSE(validate_sarif(R"({"runs": []})").valid);           // no version
  CHECK_FALSE(validate_sarif(R"({"version":"2.1.0","runs":[]})")  // empty runs
                  .valid);
  CHECK_FALSE(
      validate_sarif(R"({"version":"2.1.0","runs":{"a":1}})").valid);
  CHECK(validate_sarif(R"({"version":"2.1.0","runs":[{}]})").valid);
}
