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

#ifndef OSS_CRS_SUBPROCESS_HPP_
#define OSS_CRS_SUBPROCESS_HPP_

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace oss_crs {

// Outcome of a finished process. Signal deaths are folded into the shell
// convention exit code (128 + signo) alongside the raw signal number.
struct ProcessStatus {
  bool running = false;
  int exit_code = -1;
  int term_signal = 0;  // nonzero when killed by a signal
};

// One supervised child process in its own process group. stdout and stderr
// go to `log_path`. Thread-safe: wait/terminate may be called concurrently.
class Subprocess {
 public:
  Subprocess(std::vector<std::string> argv,
             std::map<std::string, std::string> env,
             std::filesystem::path cwd, std::filesystem::path log_path);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void start();  // throws Error on spawn failure

  // Blocks until exit or `deadline_from_now` elapses; returns current status.
  ProcessStatus wait(
      std::optional<std::chrono::milliseconds> deadline_from_now = {});

  // TERM to the process group, then KILL after `grace`. Idempotent.
  ProcessStatus terminate(std::chrono::milliseconds grace);

  ProcessStatus poll();

  pid_t pid() const { return pid_; }
  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  ProcessStatus reap_locked(bool block);

  std::vector<std::string> argv_;
  std::map<std::string, std::string> env_;
  std::filesystem::path cwd_;
  std::filesystem::path log_path_;

  std::mutex mu_;
  pid_t pid_ = -1;
  bool reaped_ = false;
  ProcessStatus status_;
};

// Runs a command to completion, capturing combined output. Used by the
// engine adapter to drive the container CLI.
struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::vector<std::string>& argv,
                          const std::map<std::string, std::string>& extra_env =
                              {},
                          std::optional<std::chrono::milliseconds> timeout =
                              {});

}  // namespace oss_crs

#endif  // OSS_CRS_SUBPROCESS_HPP_
