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

#include "oss_crs/exchange.hpp"

#include <fstream>

#include "json.hpp"
#include "oss_crs/log.hpp"
#include "oss_crs/sha256.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

std::string artifact_dir_name(ArtifactType type) {
  switch (type) {
    case ArtifactType::kSeed:
      return "seeds";
    case ArtifactType::kPov:
      return "povs";
    case ArtifactType::kPatch:
      return "patches";
    case ArtifactType::kBugCandidate:
      return "bug-candidates";
    case ArtifactType::kDiff:
      return "diffs";
  }
  return "unknown";
}

std::string artifact_type_name(ArtifactType type) {
  switch (type) {
    case ArtifactType::kSeed:
      return "seed";
    case ArtifactType::kPov:
      return "pov";
    case ArtifactType::kPatch:
      return "patch";
    case ArtifactType::kBugCandidate:
      return "bug-candidate";
    case ArtifactType::kDiff:
      return "diff";
  }
  return "unknown";
}

std::optional<ArtifactType> artifact_type_from_name(const std::string& name) {
  std::string n = to_lower(trim(name));
  for (ArtifactType t : kAllArtifactTypes) {
    if (n == artifact_type_name(t) || n == artifact_dir_name(t)) return t;
  }
  return std::nullopt;
}

namespace {

bool default_rename(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::rename(from, to, ec);
  return !ec;
}

}  // namespace

ExchangeStore::ExchangeStore(fs::path root,
                             std::shared_ptr<DedupStrategy> strategy)
    : root_(std::move(root)),
      strategy_(strategy ? std::move(strategy)
                         : std::make_shared<HashDedupStrategy>()),
      rename_fn_(default_rename) {}

void ExchangeStore::set_rename_hook(RenameFn fn) {
  rename_fn_ = fn ? std::move(fn) : default_rename;
}

void ExchangeStore::open() {
  std::lock_guard<std::mutex> lock(mu_);
  for (ArtifactType t : kAllArtifactTypes)
    fs::create_directories(root_ / artifact_dir_name(t));
  fs::create_directories(root_ / ".tmp");
  seen_.clear();
  records_.clear();
  fs::path index = root_ / "index.jsonl";
  if (!fs::exists(index)) return;
  std::ifstream in(index);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j =
        nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) continue;
    ArtifactRecord rec;
    auto type = artifact_type_from_name(j.value("type", ""));
    if (!type) continue;
    rec.type = *type;
    rec.hash = j.value("hash", "");
    rec.size = j.value("size", 0ULL);
    rec.origin = j.value("origin", "");
    rec.first_seen_ms = j.value("first_seen_ms", 0LL);
    rec.original_name = j.value("original_name", "");
    if (rec.hash.empty()) continue;
    if (seen_.insert({static_cast<int>(rec.type), rec.hash}).second)
      records_.push_back(std::move(rec));
  }
}

fs::path ExchangeStore::artifact_path(ArtifactType type,
                                      const std::string& hash) const {
  return root_ / artifact_dir_name(type) / hash;
}

IngestResult ExchangeStore::ingest(ArtifactType type, std::string_view bytes,
                                   const std::string& origin,
                                   const std::string& original_name) {
  IngestResult result;
  result.hash = content_hash(bytes);
  std::lock_guard<std::mutex> lock(mu_);

  auto key = std::make_pair(static_cast<int>(type), result.hash);
  if (seen_.count(key) || fs::exists(artifact_path(type, result.hash))) {
    seen_.insert(key);
    result.status = IngestStatus::kDuplicate;
    return result;
  }

  ArtifactRecord rec;
  rec.type = type;
  rec.hash = result.hash;
  rec.size = bytes.size();
  rec.origin = origin;
  rec.first_seen_ms = unix_millis();
  rec.original_name = original_name;

  if (!strategy_->admit(rec, bytes, *this)) {
    result.status = IngestStatus::kRejected;
    return result;
  }

  fs::path tmp = root_ / ".tmp" / (result.hash + "." + random_token(4));
  write_file(tmp, bytes);
  if (!rename_fn_(tmp, artifact_path(type, result.hash))) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw Error("exchange: rename failed for " + result.hash +
                " (no partial file left behind)");
  }

  nlohmann::json line = {{"hash", rec.hash},
                         {"type", artifact_type_name(rec.type)},
                         {"size", rec.size},
                         {"origin", rec.origin},
                         {"first_seen_ms", rec.first_seen_ms},
                         {"original_name", rec.original_name}};
  std::ofstream index(root_ / "index.jsonl", std::ios::app);
  index << line.dump() << "\n";

  seen_.insert(key);
  records_.push_back(std::move(rec));
  result.status = IngestStatus::kAdmitted;
  return result;
}

bool ExchangeStore::contains(ArtifactType type, const std::string& hash) const {
  std::lock_guard<std::mutex> lock(mu_);
  return seen_.count({static_cast<int>(type), hash}) > 0;
}

std::vector<ArtifactRecord> ExchangeStore::records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

std::map<std::string, uint64_t> ExchangeStore::counts_by_dir() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::map<std::string, uint64_t> out;
  for (ArtifactType t : kAllArtifactTypes) out[artifact_dir_name(t)] = 0;
  for (const auto& r : records_) out[artifact_dir_name(r.type)]++;
  return out;
}

std::map<std::string, std::map<std::string, uint64_t>>
ExchangeStore::counts_by_origin() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::map<std::string, std::map<std::string, uint64_t>> out;
  for (const auto& r : records_)
    out[r.origin][artifact_dir_name(r.type)]++;
  return out;
}

namespace {

// Mirrors the store into one fetch dir; returns number of new links.
uint64_t mirror_into(const ExchangeStore& store, const fs::path& fetch_dir) {
  uint64_t mirrored = 0;
  for (const ArtifactRecord& rec : store.records()) {
    fs::path dir = fetch_dir / artifact_dir_name(rec.type);
    fs::create_directories(dir);
    fs::path dst = dir / rec.hash;
    if (fs::exists(dst)) continue;
    fs::path src = store.artifact_path(rec.type, rec.hash);
    std::error_code ec;
    fs::create_hard_link(src, dst, ec);
    if (ec) {
      ec.clear();
      fs::copy_file(src, dst, fs::copy_options::skip_existing, ec);
      if (ec) {
        log_warn("exchange: mirror failed for " + dst.string() + ": " +
                 ec.message());
        continue;
      }
    }
    ++mirrored;
  }
  return mirrored;
}

}  // namespace

SyncStats sync_once(const std::vector<Registration>& registrations,
                    ExchangeStore& store) {
  SyncStats stats;
  for (const Registration& reg : registrations) {
    if (reg.kind != Registration::Kind::kSubmit) continue;
    if (!reg.artifact_type) continue;
    if (!fs::is_directory(reg.dir)) continue;
    for (const auto& entry : fs::recursive_directory_iterator(
             reg.dir, fs::directory_options::skip_permission_denied)) {
      if (!entry.is_regular_file()) continue;
      ++stats.scanned;
      std::string bytes;
      try {
        bytes = read_file(entry.path());
      } catch (const Error&) {
        ++stats.skipped;
        continue;
      }
      try {
        IngestResult r = store.ingest(*reg.artifact_type, bytes, reg.crs_name,
                                      entry.path().filename().string());
        if (r.status == IngestStatus::kAdmitted)
          ++stats.admitted;
        else if (r.status == IngestStatus::kDuplicate)
          ++stats.duplicates;
      } catch (const Error& e) {
        log_warn(std::string("exchange: ingest failed: ") + e.what());
        ++stats.skipped;
      }
    }
  }
  for (const Registration& reg : registrations) {
    if (reg.kind != Registration::Kind::kFetch) continue;
    stats.mirrored += mirror_into(store, reg.dir);
  }
  return stats;
}

ExchangeSidecar::ExchangeSidecar(ExchangeStore& store,
                                 RegistrationProvider provider,
                                 std::chrono::milliseconds poll_interval)
    : store_(store),
      provider_(std::move(provider)),
      poll_interval_(poll_interval) {
  if (poll_interval_.count() <= 0)
    throw Error("exchange sidecar: poll_interval must be > 0");
}

ExchangeSidecar::~ExchangeSidecar() { stop(); }

void ExchangeSidecar::start() {
  if (running_.exchange(true)) return;
  stop_requested_.store(false);
  thread_ = std::thread([this] { loop(); });
}

void ExchangeSidecar::stop() {
  if (!running_.load()) return;
  stop_requested_.store(true);
  if (thread_.joinable()) thread_.join();
  running_.store(false);
}

void ExchangeSidecar::loop() {
  while (true) {
    bool stopping = stop_requested_.load();
    try {
      sync_once(provider_(), store_);
      iterations_.fetch_add(1);
    } catch (const std::exception& e) {
      log_warn(std::string("exchange sidecar: sync iteration failed: ") +
               e.what());
    }
    if (stopping) return;  // the in-flight iteration completed; exit
    auto slept = std::chrono::milliseconds(0);
    const auto step = std::chrono::milliseconds(10);
    while (slept < poll_interval_ && !stop_requested_.load()) {
      std::this_thread::sleep_for(step);
      slept += step;
    }
  }
}

}  // namespace oss_crs
