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

#include "oss_crs/stub_upstream.hpp"

#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

struct StubUpstream::Impl {
  StubUpstreamConfig config;
  httplib::Server server;
  std::thread server_thread;
  bool started = false;
  mutable std::mutex mu;
  std::string last_body;
  std::string last_model;
};

StubUpstream::StubUpstream(StubUpstreamConfig config)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
}

StubUpstream::~StubUpstream() { stop(); }

void StubUpstream::start() {
  if (impl_->started) return;
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    requests_.fetch_add(1);
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    std::string model =
        body.is_discarded() ? "" : body.value("model", "");
    {
      std::lock_guard<std::mutex> lock(impl_->mu);
      impl_->last_body = req.body;
      impl_->last_model = model;
    }
    const auto& cfg = impl_->config;
    if (cfg.fail_with_status != 0) {
      res.status = cfg.fail_with_status;
      res.set_content(R"({"error":{"type":"stub_failure"}})",
                      "application/json");
      return;
    }
    nlohmann::json reply = {
        {"id", "stub-" + random_token(6)},
        {"object", "chat.completion"},
        {"model", model},
        {"choices",
         {{{"index", 0},
           {"message",
            {{"role", "assistant"}, {"content", cfg.reply_text}}},
           {"finish_reason", "stop"}}}},
        {"usage",
         {{"prompt_tokens", cfg.prompt_tokens},
          {"completion_tokens", cfg.completion_tokens},
          {"total_tokens", cfg.prompt_tokens + cfg.completion_tokens}}}};
    res.status = 200;
    res.set_content(reply.dump(), "application/json");
  };
  impl_->server.new_task_queue = [] { return new httplib::ThreadPool(16); };
  impl_->server.Post("/v1/chat/completions", handler);
  impl_->server.Post("/chat/completions", handler);
  if (impl_->config.port == 0) {
    port_ = impl_->server.bind_to_any_port(impl_->config.bind_host);
  } else {
    if (!impl_->server.bind_to_port(impl_->config.bind_host,
                                    impl_->config.port))
      throw Error("stub upstream: cannot bind port");
    port_ = impl_->config.port;
  }
  impl_->server_thread =
      std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->started = true;
}

void StubUpstream::stop() {
  if (!impl_ || !impl_->started) return;
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  impl_->started = false;
}

std::string StubUpstream::base_url() const {
  return "http://" + impl_->config.bind_host + ":" + std::to_string(port_) +
         "/v1";
}

std::string StubUpstream::last_body() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->last_body;
}

std::string StubUpstream::last_model() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->last_model;
}

}  // namespace oss_crs
