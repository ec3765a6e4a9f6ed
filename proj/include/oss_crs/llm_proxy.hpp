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

#ifndef OSS_CRS_LLM_PROXY_HPP_
#define OSS_CRS_LLM_PROXY_HPP_

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "oss_crs/config.hpp"
#include "oss_crs/money.hpp"

namespace oss_crs {

struct UsageRecord {
  std::string crs;
  std::string alias;
  std::string provider_model;
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  Cents cost = 0;  // price formula result, rounded half-up to the cent
  int64_t timestamp_ms = 0;
};

struct ApiKey {
  std::string token;  // >= 32 bytes of opaque material, hex-encoded
  std::string crs_name;
};

struct LedgerSnapshot {
  Cents limit = 0;
  Cents spent = 0;
  std::vector<UsageRecord> records;
};

struct ProxyConfig {
  LlmMode mode = LlmMode::kInternal;
  std::vector<ModelRoute> routes;
  std::string external_endpoint;
  std::string external_key;
  std::string bind_host = "127.0.0.1";
  int port = 0;  // 0: pick a free port
  // Credential resolution seam; defaults to getenv.
  std::function<std::string(const std::string&)> env_lookup;
};

// OpenAI-compatible completion endpoint with model aliasing, per-CRS key
// issuance, and dollar-budget enforcement.
//
// Admission is "reject iff spent >= limit at arrival" with post-hoc charging
// of the actual upstream-reported cost, so overshoot is bounded by the cost
// of in-flight requests. Each ledger's check and charge run under one lock:
// concurrent accounting loses no updates.
class LlmProxy {
 public:
  explicit LlmProxy(ProxyConfig config);
  ~LlmProxy();

  // Internal mode: one key per CRS, ledger limit = its budget.
  std::map<std::string, ApiKey> issue_keys(
      const std::vector<std::pair<std::string, Cents>>& crs_budgets);

  const ModelRoute* route_model(const std::string& alias) const;

  void start();
  void stop();
  int port() const { return port_; }
  std::string base_url() const;  // http://<host>:<port>/v1

  LedgerSnapshot ledger(const std::string& crs_name) const;

  // Per-CRS totals: requests, tokens, dollars, per-alias breakdown.
  std::string usage_report_json() const;

 private:
  struct Ledger;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace oss_crs

#endif  // OSS_CRS_LLM_PROXY_HPP_
