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

#include "oss_crs/llm_proxy.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "oss_crs/log.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

// Splits "http://host:port/base" into client origin and path prefix.
struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string path;    // possibly empty base path, no trailing slash
};

ParsedUrl parse_base_url(const std::string& url) {
  ParsedUrl out;
  auto scheme_end = url.find("://");
  size_t path_start = scheme_end == std::string::npos
                          ? url.find('/')
                          : url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

nlohmann::json error_body(const std::string& type,
                          const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

struct LlmProxy::Ledger {
  std::mutex mu;
  Cents limit = 0;
  Cents spent = 0;
  std::vector<UsageRecord> records;
  std::string crs_name;
};

struct LlmProxy::Impl {
  ProxyConfig config;
  httplib::Server server;
  std::thread server_thread;
  bool started = false;

  mutable std::mutex keys_mu;
  std::map<std::string, std::shared_ptr<Ledger>> by_token;
  std::map<std::string, std::shared_ptr<Ledger>> by_crs;

  std::shared_ptr<Ledger> external_ledger;  // external-mode aggregate

  std::string resolve_credential(const std::string& ref) const {
    if (ref.empty()) return "";
    if (config.env_lookup) return config.env_lookup(ref);
    const char* v = std::getenv(ref.c_str());
    return v ? v : "";
  }

  std::shared_ptr<Ledger> ledger_for_token(const std::string& token) const {
    std::lock_guard<std::mutex> lock(keys_mu);
    auto it = by_token.find(token);
    return it == by_token.end() ? nullptr : it->second;
  }

  void handle_completion(const httplib::Request& req, httplib::Response& res);
  void forward_internal(const nlohmann::json& body, Ledger& ledger,
                        httplib::Response& res);
  void forward_external(const httplib::Request& req, httplib::Response& res);
};

LlmProxy::LlmProxy(ProxyConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->external_ledger = std::make_shared<Ledger>();
  impl_->external_ledger->crs_name = "external";
  impl_->external_ledger->limit = 0;
}

LlmProxy::~LlmProxy() { stop(); }

std::map<std::string, ApiKey> LlmProxy::issue_keys(
    const std::vector<std::pair<std::string, Cents>>& crs_budgets) {
  if (impl_->config.mode != LlmMode::kInternal)
    throw Error("issue_keys requires internal mode");
  std::map<std::string, ApiKey> keys;
  std::lock_guard<std::mutex> lock(impl_->keys_mu);
  for (const auto& [crs, budget] : crs_budgets) {
    ApiKey key;
    key.crs_name = crs;
    do {
      key.token = "sk-oss-crs-" + random_token(32);
    } while (impl_->by_token.count(key.token));
    auto ledger = std::make_shared<Ledger>();
    ledger->limit = budget;
    ledger->crs_name = crs;
    impl_->by_token[key.token] = ledger;
    impl_->by_crs[crs] = ledger;
    keys[crs] = key;
  }
  return keys;
}

const ModelRoute* LlmProxy::route_model(const std::string& alias) const {
  for (const auto& r : impl_->config.routes)
    if (r.alias == alias) return &r;
  return nullptr;
}

void LlmProxy::Impl::forward_internal(const nlohmann::json& body,
                                      Ledger& ledger,
                                      httplib::Response& res) {
  std::string alias = body.value("model", "");
  const ModelRoute* route = nullptr;
  for (const auto& r : config.routes)
    if (r.alias == alias) route = &r;
  if (!route) {
    res.status = 404;
    res.set_content(error_body("model_not_found",
                               "no route for model '" + alias + "'")
                        .dump(),
                    "application/json");
    return;
  }

  // Admission: reject iff spent >= limit at arrival.
  {
    std::lock_guard<std::mutex> lock(ledger.mu);
    if (ledger.spent >= ledger.limit) {
      res.status = 402;
      nlohmann::json quota = {
          {"error",
           {{"type", "budget_exhausted"},
            {"crs", ledger.crs_name},
            {"spent", format_cents(ledger.spent)},
            {"limit", format_cents(ledger.limit)}}}};
      res.set_content(quota.dump(), "application/json");
      return;
    }
  }

  nlohmann::json upstream_body = body;
  upstream_body["model"] = route->provider_model;

  ParsedUrl url = parse_base_url(route->endpoint);
  httplib::Client client(url.origin);
  client.set_read_timeout(30, 0);
  client.set_connection_timeout(10, 0);
  httplib::Headers headers;
  std::string credential = resolve_credential(route->credential_ref);
  if (!credential.empty())
    headers.emplace("Authorization", "Bearer " + credential);
  auto upstream = client.Post(url.path + "/chat/completions", headers,
                              upstream_body.dump(), "application/json");
  if (!upstream || upstream->status < 200 || upstream->status >= 300) {
    res.status = 502;
    std::string detail = upstream ? "upstream status " +
                                        std::to_string(upstream->status)
                                  : "upstream unreachable";
    res.set_content(error_body("upstream_error", detail).dump(),
                    "application/json");
    return;  // zero cost recorded on upstream failure
  }

  nlohmann::json reply = nlohmann::json::parse(upstream->body, nullptr, false);
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  if (!reply.is_discarded() && reply.contains("usage")) {
    prompt_tokens = reply["usage"].value("prompt_tokens", 0LL);
    completion_tokens = reply["usage"].value("completion_tokens", 0LL);
  }
  Cents cost = request_cost_cents(prompt_tokens, route->price_in,
                                  completion_tokens, route->price_out);
  {
    std::lock_guard<std::mutex> lock(ledger.mu);
    UsageRecord rec;
    rec.crs = ledger.crs_name;
    rec.alias = alias;
    rec.provider_model = route->provider_model;
    rec.prompt_tokens = prompt_tokens;
    rec.completion_tokens = completion_tokens;
    rec.cost = cost;
    rec.timestamp_ms = unix_millis();
    ledger.records.push_back(std::move(rec));
    ledger.spent += cost;
  }
  res.status = 200;
  res.set_content(upstream->body, "application/json");
}

void LlmProxy::Impl::forward_external(const httplib::Request& req,
                                      httplib::Response& res) {
  ParsedUrl url = parse_base_url(config.external_endpoint);
  httplib::Client client(url.origin);
  client.set_read_timeout(30, 0);
  client.set_connection_timeout(10, 0);
  httplib::Headers headers;
  if (!config.external_key.empty())
    headers.emplace("Authorization", "Bearer " + config.external_key);
  auto upstream = client.Post(url.path + "/chat/completions", headers,
                              req.body, "application/json");
  if (!upstream) {
    res.status = 502;
    res.set_content(error_body("upstream_error", "external endpoint "
                                                 "unreachable")
                        .dump(),
                    "application/json");
    return;
  }
  // Verbatim relay; usage is ledgered when reported but never enforced.
  nlohmann::json reply = nlohmann::json::parse(upstream->body, nullptr, false);
  if (upstream->status >= 200 && upstream->status < 300 &&
      !reply.is_discarded() && reply.contains("usage")) {
    nlohmann::json request_body =
        nlohmann::json::parse(req.body, nullptr, false);
    std::lock_guard<std::mutex> lock(external_ledger->mu);
    UsageRecord rec;
    rec.crs = "external";
    rec.alias = request_body.is_discarded()
                    ? ""
                    : request_body.value("model", "");
    rec.provider_model = rec.alias;
    rec.prompt_tokens = reply["usage"].value("prompt_tokens", 0LL);
    rec.completion_tokens = reply["usage"].value("completion_tokens", 0LL);
    rec.cost = 0;  // no local price table for external upstreams
    rec.timestamp_ms = unix_millis();
    external_ledger->records.push_back(std::move(rec));
  }
  res.status = upstream->status;
  std::string content_type = upstream->get_header_value("Content-Type");
  if (content_type.empty()) content_type = "application/json";
  res.set_content(upstream->body, content_type);
}

void LlmProxy::Impl::handle_completion(const httplib::Request& req,
                                       httplib::Response& res) {
  nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    res.status = 400;
    res.set_content(error_body("invalid_request", "body is not JSON").dump(),
                    "application/json");
    return;
  }
  if (body.value("stream", false)) {
    res.status = 400;
    res.set_content(
        error_body("streaming_unsupported",
                   "streaming responses are not supported")
            .dump(),
        "application/json");
    return;
  }

  if (config.mode == LlmMode::kExternal) {
    forward_external(req, res);
    return;
  }

  std::string auth = req.get_header_value("Authorization");
  const std::string prefix = "Bearer ";
  if (auth.rfind(prefix, 0) != 0) {
    res.status = 401;
    res.set_content(error_body("invalid_api_key", "missing bearer token")
                        .dump(),
                    "application/json");
    return;
  }
  auto ledger = ledger_for_token(auth.substr(prefix.size()));
  if (!ledger) {
    res.status = 401;
    res.set_content(error_body("invalid_api_key", "unknown API key").dump(),
                    "application/json");
    return;
  }
  forward_internal(body, *ledger, res);
}

void LlmProxy::start() {
  if (impl_->started) return;
  auto& server = impl_->server;
  server.new_task_queue = [] { return new httplib::ThreadPool(16); };
  server.Post("/v1/chat/completions",
              [this](const httplib::Request& req, httplib::Response& res) {
                impl_->handle_completion(req, res);
              });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  if (impl_->config.port == 0) {
    port_ = server.bind_to_any_port(impl_->config.bind_host);
  } else {
    if (!server.bind_to_port(impl_->config.bind_host, impl_->config.port))
      throw Error("llm proxy: cannot bind port " +
                  std::to_string(impl_->config.port));
    port_ = impl_->config.port;
  }
  impl_->server_thread = std::thread([this] {
    impl_->server.listen_after_bind();
  });
  impl_->server.wait_until_ready();
  impl_->started = true;
  log_info("llm proxy listening on " + base_url() + " (mode " +
           to_string(impl_->config.mode) + ")");
}

void LlmProxy::stop() {
  if (!impl_ || !impl_->started) return;
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  impl_->started = false;
}

std::string LlmProxy::base_url() const {
  return "http://" + impl_->config.bind_host + ":" + std::to_string(port_) +
         "/v1";
}

LedgerSnapshot LlmProxy::ledger(const std::string& crs_name) const {
  std::shared_ptr<Ledger> ledger;
  {
    std::lock_guard<std::mutex> lock(impl_->keys_mu);
    auto it = impl_->by_crs.find(crs_name);
    if (it != impl_->by_crs.end()) ledger = it->second;
  }
  if (!ledger && crs_name == "external") ledger = impl_->external_ledger;
  LedgerSnapshot snap;
  if (!ledger) return snap;
  std::lock_guard<std::mutex> lock(ledger->mu);
  snap.limit = ledger->limit;
  snap.spent = ledger->spent;
  snap.records = ledger->records;
  return snap;
}

std::string LlmProxy::usage_report_json() const {
  nlohmann::json report = nlohmann::json::object();
  std::vector<std::shared_ptr<Ledger>> ledgers;
  {
    std::lock_guard<std::mutex> lock(impl_->keys_mu);
    for (const auto& [crs, ledger] : impl_->by_crs) ledgers.push_back(ledger);
  }
  if (impl_->config.mode == LlmMode::kExternal)
    ledgers.push_back(impl_->external_ledger);
  for (const auto& ledger : ledgers) {
    std::lock_guard<std::mutex> lock(ledger->mu);
    nlohmann::json per_alias = nlohmann::json::object();
    int64_t prompt = 0;
    int64_t completion = 0;
    for (const auto& rec : ledger->records) {
      prompt += rec.prompt_tokens;
      completion += rec.completion_tokens;
      auto& row = per_alias[rec.alias.empty() ? "(unknown)" : rec.alias];
      if (row.is_null()) row = nlohmann::json::object();
      row["requests"] = row.value("requests", 0) + 1;
      row["prompt_tokens"] = row.value("prompt_tokens", 0LL) +
                             rec.prompt_tokens;
      row["completion_tokens"] = row.value("completion_tokens", 0LL) +
                                 rec.completion_tokens;
      row["dollars"] = format_cents(
          parse_money_cents(row.value("dollars", std::string("0.00"))) +
          rec.cost);
    }
    report[ledger->crs_name] = {
        {"requests", ledger->records.size()},
        {"prompt_tokens", prompt},
        {"completion_tokens", completion},
        {"spent", format_cents(ledger->spent)},
        {"limit", format_cents(ledger->limit)},
        {"models", per_alias}};
  }
  return report.dump(2);
}

}  // namespace oss_crs
