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

#ifndef OSS_CRS_STUB_UPSTREAM_HPP_
#define OSS_CRS_STUB_UPSTREAM_HPP_

#include <atomic>
#include <memory>
#include <string>

namespace oss_crs {

// Canned OpenAI-shape completion provider with configurable usage fields.
// Makes every budget and routing behavior testable offline.
struct StubUpstreamConfig {
  int64_t prompt_tokens = 1000;
  int64_t completion_tokens = 0;
  std::string reply_text = "stub completion";
  int fail_with_status = 0;  // nonzero: every request fails with this status
  std::string bind_host = "127.0.0.1";
  int port = 0;
};

class StubUpstream {
 public:
  explicit StubUpstream(StubUpstreamConfig config = {});
  ~StubUpstream();

  void start();
  void stop();
  int port() const { return port_; }
  std::string base_url() const;  // http://<host>:<port>/v1

  uint64_t request_count() const { return requests_.load(); }
  std::string last_body() const;
  std::string last_model() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<uint64_t> requests_{0};
  int port_ = 0;
};

}  // namespace oss_crs

#endif  // OSS_CRS_STUB_UPSTREAM_HPP_
