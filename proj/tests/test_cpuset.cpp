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
#include <random>

#include "doctest.h"
#include "oss_crs/cpuset.hpp"
#include "oss_crs/util.hpp"

using namespace oss_crs;

TEST_CASE("descriptor 4-7 denotes exactly cores 4..7") {
  CpuSet s = CpuSet::parse("4-7");
  CHECK(s.cores() == std::set<int>{4, 5, 6, 7});
  CHECK(s.canonical() == "4-7");
  CHECK(s.source_text() == "4-7");
}

TEST_CASE("singleton descriptor") {
  CpuSet s = CpuSet::parse("0");
  CHECK(s.cores() == std::set<int>{0});
  CHECK(s.canonical() == "0");
}

TEST_CASE("mixed list and range collapse to canonical form") {
  CpuSet s = CpuSet::parse("0,2,4-6");
  CHECK(s.cores() == std::set<int>{0, 2, 4, 5, 6});
  CHECK(s.canonical() == "0,2,4-6");

  // Unsorted, redundant input still canonicalizes.
  CHECK(CpuSet::parse("6,4,5,2,0").canonical() == "0,2,4-6");
  CHECK(CpuSet::parse("0-3,2-5").canonical() == "0-5");
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(CpuSet::parse(""), ConfigError);
  CHECK_THROWS_AS(CpuSet::parse("  "), ConfigError);
  CHECK_THROWS_AS(CpuSet::parse("7-4"), ConfigError);
  CHECK_THROWS_AS(CpuSet::parse("a"), ConfigError);
  CHECK_THROWS_AS(CpuSet::parse("1,,2"), ConfigError);
  CHECK_THROWS_AS(CpuSet::parse("1,-"), ConfigError);
  CHECK_THROWS_AS(CpuSet::parse("3-x"), ConfigError);
}

TEST_CASE("canonical round trip is idempotent on random descriptors") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    // Build a random valid descriptor.
    std::string desc;
    int parts = 1 + static_cast<int>(rng() % 4);
    for (int p = 0; p < parts; ++p) {
      if (p > 0) desc += ",";
      int lo = static_cast<int>(rng() % 32);
      if (rng() % 2) {
        int hi = lo + static_cast<int>(rng() % 8);
        desc += std::to_string(lo) + "-" + std::to_string(hi);
      } else {
        desc += std::to_string(lo);
      }
    }
    std::string once = CpuSet::parse(desc).canonical();
    std::string twice = CpuSet::parse(once).canonical();
    CHECK(once == twice);
    // And the canonical form denotes the same cores.
    CHECK(CpuSet::parse(desc).cores() == CpuSet::parse(once).cores());
  }
}

TEST_CASE("set operations used by validation") {
  CpuSet a = CpuSet::parse("0-7");
  CpuSet b = CpuSet::parse("4-11");
  CHECK(a.intersection(b) == std::set<int>{4, 5, 6, 7});
  CHECK(a.contains_all(CpuSet::parse("2-5")));
  CHECK_FALSE(a.contains_all(b));
}
