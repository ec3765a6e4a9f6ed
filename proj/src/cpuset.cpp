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

#include "oss_crs/cpuset.hpp"

#include <algorithm>
#include <cctype>

#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

int parse_core_index(const std::string& token) {
  std::string t = trim(token);
  if (t.empty()) throw ConfigError("cpuset: empty core index");
  for (char c : t)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ConfigError("cpuset: non-numeric token '" + token + "'");
  if (t.size() > 7) throw ConfigError("cpuset: index out of range '" + t + "'");
  return std::stoi(t);
}

}  // namespace

CpuSet CpuSet::parse(const std::string& text) {
  if (trim(text).empty()) throw ConfigError("cpuset: empty descriptor");
  CpuSet out;
  out.source_text_ = text;
  for (const std::string& part : split(text, ',')) {
    std::string p = trim(part);
    if (p.empty()) throw ConfigError("cpuset: empty element in '" + text + "'");
    auto dash = p.find('-');
    if (dash == std::string::npos) {
      out.cores_.insert(parse_core_index(p));
    } else {
      int lo = parse_core_index(p.substr(0, dash));
      int hi = parse_core_index(p.substr(dash + 1));
      if (hi < lo)
        throw ConfigError("cpuset: reversed range '" + p + "' (hi < lo)");
      for (int c = lo; c <= hi; ++c) out.cores_.insert(c);
    }
  }
  return out;
}

std::string CpuSet::canonical() const { return format_core_set(cores_); }

bool CpuSet::contains_all(const CpuSet& other) const {
  return std::includes(cores_.begin(), cores_.end(), other.cores_.begin(),
                       other.cores_.end());
}

std::set<int> CpuSet::intersection(const CpuSet& other) const {
  std::set<int> out;
  std::set_intersection(cores_.begin(), cores_.end(), other.cores_.begin(),
                        other.cores_.end(), std::inserter(out, out.begin()));
  return out;
}

std::string format_core_set(const std::set<int>& cores) {
  std::string out;
  auto it = cores.begin();
  while (it != cores.end()) {
    int lo = *it;
    int hi = lo;
    auto next = std::next(it);
    while (next != cores.end() && *next == hi + 1) {
      hi = *next;
      ++next;
    }
    if (!out.empty()) out += ",";
    if (hi == lo)
      out += std::to_string(lo);
    else
      out += std::to_string(lo) + "-" + std::to_string(hi);
    it = next;
  }
  return out;
}

}  // namespace oss_crs
