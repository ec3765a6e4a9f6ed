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

#ifndef OSS_CRS_CONTROL_HPP_
#define OSS_CRS_CONTROL_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oss_crs/exchange.hpp"

namespace oss_crs {

// One line of <control-dir>/registrations.jsonl. The control file is the
// registration transport between libcrs (inside a container) and the
// exchange sidecar (on the host): it survives sidecar restarts and needs no
// in-container networking.
struct ControlRecord {
  enum class Kind { kSubmit, kFetch, kShared, kBuildOutput };
  Kind kind = Kind::kSubmit;
  std::string dir;  // path as seen by the writer
  std::optional<ArtifactType> artifact_type;  // submit only
  std::string crs_name;

  bool same_registration(const ControlRecord& o) const {
    return kind == o.kind && dir == o.dir && artifact_type == o.artifact_type;
  }
};

std::string control_kind_name(ControlRecord::Kind kind);

// Appends under an advisory lock; identical (kind, dir, type) records are
// idempotent no-ops. Returns true when a new record was written.
bool append_control_record(const fs::path& control_dir,
                           const ControlRecord& record);

std::vector<ControlRecord> read_control_records(const fs::path& control_dir);

inline fs::path control_file_path(const fs::path& control_dir) {
  return control_dir / "registrations.jsonl";
}

}  // namespace oss_crs

#endif  // OSS_CRS_CONTROL_HPP_
