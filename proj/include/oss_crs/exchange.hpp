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

#ifndef OSS_CRS_EXCHANGE_HPP_
#define OSS_CRS_EXCHANGE_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace oss_crs {

namespace fs = std::filesystem;

enum class ArtifactType { kSeed, kPov, kPatch, kBugCandidate, kDiff };

constexpr ArtifactType kAllArtifactTypes[] = {
    ArtifactType::kSeed, ArtifactType::kPov, ArtifactType::kPatch,
    ArtifactType::kBugCandidate, ArtifactType::kDiff};

// Exchange directory names: seeds/ povs/ patches/ bug-candidates/ diffs/.
std::string artifact_dir_name(ArtifactType type);
std::string artifact_type_name(ArtifactType type);  // singular: "seed"
std::optional<ArtifactType> artifact_type_from_name(const std::string& name);

struct ArtifactRecord {
  ArtifactType type = ArtifactType::kSeed;
  std::string hash;  // lowercase hex SHA-256 of the file bytes
  uint64_t size = 0;
  std::string origin;  // CRS name or "operator"
  int64_t first_seen_ms = 0;
  std::string original_name;
};

class ExchangeStore;

// Admission hook. The (type, hash) exactly-once rule is enforced by the
// store before a strategy is consulted, so strategies can narrow but never
// widen the admitted set.
class DedupStrategy {
 public:
  virtual ~DedupStrategy() = default;
  virtual std::string name() const = 0;
  virtual bool admit(const ArtifactRecord& candidate, std::string_view bytes,
                     const ExchangeStore& store) = 0;
};

// Baseline: admit everything the hash check lets through.
class HashDedupStrategy : public DedupStrategy {
 public:
  std::string name() const override { return "hash"; }
  bool admit(const ArtifactRecord&, std::string_view,
             const ExchangeStore&) override {
    return true;
  }
};

enum class IngestStatus { kAdmitted, kDuplicate, kRejected };

struct IngestResult {
  IngestStatus status = IngestStatus::kRejected;
  std::string hash;
};

// Content-addressed store: <root>/<type-dir>/<hash> plus index.jsonl.
// Files appear atomically (temp write + rename); a failed rename leaves
// nothing visible. Safe for concurrent use from multiple threads.
class ExchangeStore {
 public:
  explicit ExchangeStore(fs::path root,
                         std::shared_ptr<DedupStrategy> strategy = nullptr);

  // Creates the layout and loads any existing index.
  void open();

  IngestResult ingest(ArtifactType type, std::string_view bytes,
                      const std::string& origin,
                      const std::string& original_name = "");

  bool contains(ArtifactType type, const std::string& hash) const;
  std::vector<ArtifactRecord> records() const;
  std::map<std::string, uint64_t> counts_by_dir() const;
  std::map<std::string, std::map<std::string, uint64_t>> counts_by_origin()
      const;

  const fs::path& root() const { return root_; }
  fs::path artifact_path(ArtifactType type, const std::string& hash) const;

  // Test seam: replaces the rename step. Return false to simulate a crash
  // between temp write and publication. An empty function restores the
  // default filesystem rename.
  using RenameFn = std::function<bool(const fs::path&, const fs::path&)>;
  void set_rename_hook(RenameFn fn);

 private:
  fs::path root_;
  std::shared_ptr<DedupStrategy> strategy_;
  RenameFn rename_fn_;
  mutable std::mutex mu_;
  std::set<std::pair<int, std::string>> seen_;  // (type, hash)
  std::vector<ArtifactRecord> records_;
};

struct Registration {
  enum class Kind { kSubmit, kFetch, kShared };
  std::string crs_name;
  Kind kind = Kind::kSubmit;
  fs::path dir;
  std::optional<ArtifactType> artifact_type;  // required for submit

  bool operator<(const Registration& o) const {
    return std::tie(crs_name, kind, dir, artifact_type) <
           std::tie(o.crs_name, o.kind, o.dir, o.artifact_type);
  }
};

struct SyncStats {
  uint64_t scanned = 0;
  uint64_t admitted = 0;
  uint64_t duplicates = 0;
  uint64_t mirrored = 0;
  uint64_t skipped = 0;  // unreadable submit files
};

// One full pass: ingest every readable file in every submit dir, then mirror
// the store into every fetch dir (additive, hard-link or copy).
SyncStats sync_once(const std::vector<Registration>& registrations,
                    ExchangeStore& store);

// Periodic sync loop. A failing iteration is logged and the loop continues;
// stop() lets the current iteration finish, runs one final pass, then exits.
class ExchangeSidecar {
 public:
  using RegistrationProvider = std::function<std::vector<Registration>()>;

  ExchangeSidecar(ExchangeStore& store, RegistrationProvider provider,
                  std::chrono::milliseconds poll_interval);
  ~ExchangeSidecar();

  void start();
  void stop();

  uint64_t iterations() const { return iterations_.load(); }

 private:
  void loop();

  ExchangeStore& store_;
  RegistrationProvider provider_;
  std::chrono::milliseconds poll_interval_;
  std::thread thread_;
  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> running_{false};
  std::atomic<uint64_t> iterations_{0};
};

}  // namespace oss_crs

#endif  // OSS_CRS_EXCHANGE_HPP_
