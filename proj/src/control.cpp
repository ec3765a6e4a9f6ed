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

#include "oss_crs/control.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <sstream>

#include "json.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

std::optional<ControlRecord> parse_record_line(const std::string& line) {
  nlohmann::json j =
      nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  ControlRecord rec;
  std::string kind = j.value("kind", "");
  if (kind == "submit")
    rec.kind = ControlRecord::Kind::kSubmit;
  else if (kind == "fetch")
    rec.kind = ControlRecord::Kind::kFetch;
  else if (kind == "shared")
    rec.kind = ControlRecord::Kind::kShared;
  else if (kind == "build-output")
    rec.kind = ControlRecord::Kind::kBuildOutput;
  else
    return std::nullopt;
  rec.dir = j.value("dir", "");
  rec.crs_name = j.value("crs", "");
  if (j.contains("artifact_type"))
    rec.artifact_type =
        artifact_type_from_name(j.value("artifact_type", ""));
  if (rec.kind == ControlRecord::Kind::kSubmit && !rec.artifact_type)
    return std::nullopt;
  return rec;
}

std::string record_to_line(const ControlRecord& rec) {
  nlohmann::json j = {{"kind", control_kind_name(rec.kind)},
                      {"dir", rec.dir},
                      {"crs", rec.crs_name}};
  if (rec.artifact_type)
    j["artifact_type"] = artifact_type_name(*rec.artifact_type);
  return j.dump();
}

// RAII advisory lock over the whole control file.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ >= 0) flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  bool ok() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

}  // namespace

std::string control_kind_name(ControlRecord::Kind kind) {
  switch (kind) {
    case ControlRecord::Kind::kSubmit:
      return "submit";
    case ControlRecord::Kind::kFetch:
      return "fetch";
    case ControlRecord::Kind::kShared:
      return "shared";
    case ControlRecord::Kind::kBuildOutput:
      return "build-output";
  }
  return "unknown";
}

bool append_control_record(const fs::path& control_dir,
                           const ControlRecord& record) {
  fs::create_directories(control_dir);
  fs::path file = control_file_path(control_dir);
  FileLock lock(file);
  if (!lock.ok()) throw Error("cannot lock control file " + file.string());
  std::string existing;
  if (fs::exists(file)) existing = read_file(file);
  std::istringstream in(existing);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto rec = parse_record_line(line);
    if (rec && rec->same_registration(record)) return false;
  }
  std::string out = existing;
  if (!out.empty() && out.back() != '\n') out += "\n";
  out += record_to_line(record) + "\n";
  write_file(file, out);
  return true;
}

std::vector<ControlRecord> read_control_records(const fs::path& control_dir) {
  std::vector<ControlRecord> records;
  fs::path file = control_file_path(control_dir);
  if (!fs::exists(file)) return records;
  std::istringstream in(read_file(file));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto rec = parse_record_line(line);
    if (!rec) continue;
    bool duplicate = false;
    for (const auto& existing : records)
      if (existing.same_registration(*rec)) duplicate = true;
    if (!duplicate) records.push_back(*rec);
  }
  return records;
}

}  // namespace oss_crs
