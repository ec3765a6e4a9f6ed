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

#include "oss_crs/subprocess.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "oss_crs/util.hpp"

extern char** environ;

namespace oss_crs {

namespace {

std::vector<char*> to_cstr_vec(const std::vector<std::string>& v) {
  std::vector<char*> out;
  out.reserve(v.size() + 1);
  for (const auto& s : v) out.push_back(const_cast<char*>(s.c_str()));
  out.push_back(nullptr);
  return out;
}

ProcessStatus status_from_wait(int wstatus) {
  ProcessStatus st;
  st.running = false;
  if (WIFEXITED(wstatus)) {
    st.exit_code = WEXITSTATUS(wstatus);
  } else if (WIFSIGNALED(wstatus)) {
    st.term_signal = WTERMSIG(wstatus);
    st.exit_code = 128 + st.term_signal;
  }
  return st;
}

}  // namespace

Subprocess::Subprocess(std::vector<std::string> argv,
                       std::map<std::string, std::string> env,
                       std::filesystem::path cwd,
                       std::filesystem::path log_path)
    : argv_(std::move(argv)),
      env_(std::move(env)),
      cwd_(std::move(cwd)),
      log_path_(std::move(log_path)) {}

Subprocess::~Subprocess() {
  std::lock_guard<std::mutex> lock(mu_);
  if (pid_ > 0 && !reaped_) {
    kill(-pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    reaped_ = true;
  }
}

void Subprocess::start() {
  if (argv_.empty()) throw Error("subprocess: empty argv");
  if (log_path_.has_parent_path())
    std::filesystem::create_directories(log_path_.parent_path());
  int log_fd = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (log_fd < 0)
    throw Error("subprocess: cannot open log " + log_path_.string());

  // Full environment strings must be built before fork.
  std::vector<std::string> env_strings;
  env_strings.reserve(env_.size());
  for (const auto& [k, v] : env_) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp = to_cstr_vec(env_strings);
  std::vector<char*> argv = to_cstr_vec(argv_);
  std::string cwd = cwd_.string();

  pid_t pid = fork();
  if (pid < 0) {
    ::close(log_fd);
    throw Error("subprocess: fork failed: " + std::string(strerror(errno)));
  }
  if (pid == 0) {
    setpgid(0, 0);
    if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
    dup2(log_fd, STDOUT_FILENO);
    dup2(log_fd, STDERR_FILENO);
    ::close(log_fd);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) {
      dup2(devnull, STDIN_FILENO);
      ::close(devnull);
    }
    execve(argv[0], argv.data(), envp.data());
    // execve only returns on failure; try PATH resolution as a fallback.
    execvpe(argv[0], argv.data(), envp.data());
    _exit(127);
  }
  ::close(log_fd);
  // Parent-side setpgid too: closes the race with the child's exec.
  setpgid(pid, pid);
  std::lock_guard<std::mutex> lock(mu_);
  pid_ = pid;
  status_.running = true;
}

ProcessStatus Subprocess::reap_locked(bool block) {
  if (reaped_ || pid_ <= 0) return status_;
  int wstatus = 0;
  pid_t r = waitpid(pid_, &wstatus, block ? 0 : WNOHANG);
  if (r == pid_) {
    status_ = status_from_wait(wstatus);
    reaped_ = true;
    // The group leader is gone but descendants may linger.
    kill(-pid_, SIGKILL);
  } else if (r < 0 && errno == ECHILD) {
    status_.running = false;
    reaped_ = true;
  }
  return status_;
}

ProcessStatus Subprocess::poll() {
  std::lock_guard<std::mutex> lock(mu_);
  return reap_locked(false);
}

ProcessStatus Subprocess::wait(
    std::optional<std::chrono::milliseconds> deadline_from_now) {
  if (!deadline_from_now) {
    std::lock_guard<std::mutex> lock(mu_);
    return reap_locked(true);
  }
  auto deadline = std::chrono::steady_clock::now() + *deadline_from_now;
  while (true) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ProcessStatus st = reap_locked(false);
      if (!st.running) return st;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      std::lock_guard<std::mutex> lock(mu_);
      return status_;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

ProcessStatus Subprocess::terminate(std::chrono::milliseconds grace) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    ProcessStatus st = reap_locked(false);
    if (!st.running) return st;
    kill(-pid_, SIGTERM);
  }
  ProcessStatus st = wait(grace);
  if (!st.running) return st;
  {
    std::lock_guard<std::mutex> lock(mu_);
    kill(-pid_, SIGKILL);
    return reap_locked(true);
  }
}

CommandResult run_command(const std::vector<std::string>& argv,
                          const std::map<std::string, std::string>& extra_env,
                          std::optional<std::chrono::milliseconds> timeout) {
  if (argv.empty()) throw Error("run_command: empty argv");
  int pipefd[2];
  if (pipe(pipefd) != 0) throw Error("run_command: pipe failed");

  std::vector<std::string> env_strings;
  for (char** e = environ; *e != nullptr; ++e) env_strings.push_back(*e);
  for (const auto& [k, v] : extra_env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp = to_cstr_vec(env_strings);
  std::vector<char*> cargv = to_cstr_vec(argv);

  pid_t pid = fork();
  if (pid < 0) {
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    throw Error("run_command: fork failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    ::close(pipefd[0]);
    dup2(pipefd[1], STDOUT_FILENO);
    dup2(pipefd[1], STDERR_FILENO);
    ::close(pipefd[1]);
    execvpe(cargv[0], cargv.data(), envp.data());
    _exit(127);
  }
  setpgid(pid, pid);
  ::close(pipefd[1]);

  CommandResult result;
  auto deadline = timeout ? std::optional(std::chrono::steady_clock::now() +
                                          *timeout)
                          : std::nullopt;
  // Nonblocking read loop so command timeouts can interrupt a chatty child.
  fcntl(pipefd[0], F_SETFL, O_NONBLOCK);
  char buf[4096];
  bool timed_out = false;
  while (true) {
    ssize_t n = read(pipefd[0], buf, sizeof(buf));
    if (n > 0) {
      result.output.append(buf, static_cast<size_t>(n));
      continue;
    }
    if (n == 0) break;  // EOF
    if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) break;
    if (deadline && std::chrono::steady_clock::now() >= *deadline) {
      kill(-pid, SIGKILL);
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::close(pipefd[0]);
  int wstatus = 0;
  waitpid(pid, &wstatus, 0);
  ProcessStatus st = status_from_wait(wstatus);
  result.exit_code = timed_out ? 124 : st.exit_code;
  return result;
}

}  // namespace oss_crs
