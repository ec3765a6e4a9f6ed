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

#ifndef OSS_CRS_CPUSET_HPP_
#define OSS_CRS_CPUSET_HPP_

#include <set>
#include <string>

namespace oss_crs {

// A set of CPU core indices with its original descriptor text.
// Descriptors are comma-separated indices and inclusive ranges: "0,2,4-6".
class CpuSet {
 public:
  CpuSet() = default;

  // Throws ConfigError on empty text, reversed ranges, or non-numeric tokens.
  static CpuSet parse(const std::string& text);

  // Canonical descriptor: ascending, maximal ranges collapsed ("0,2,4-6").
  std::string canonical() const;

  const std::set<int>& cores() const { return cores_; }
  const std::string& source_text() const { return source_text_; }
  bool empty() const { return cores_.empty(); }

  bool contains_all(const CpuSet& other) const;
  std::set<int> intersection(const CpuSet& other) const;

  bool operator==(const CpuSet& other) const { return cores_ == other.cores_; }

 private:
  std::set<int> cores_;
  std::string source_text_;
};

// Renders a bare core set in the same canonical descriptor form.
std::string format_core_set(const std::set<int>& cores);

}  // namespace oss_crs

#endif  // OSS_CRS_CPUSET_HPP_
