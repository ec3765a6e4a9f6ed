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

#include "oss_crs/mock_runtime.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "json.hpp"
#include "oss_crs/log.hpp"
#include "oss_crs/sha256.hpp"
#include "oss_crs/subprocess.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

std::string to_string(ContainerState s) {
  switch (s) {
    case ContainerState::kCreated:
      return "created";
    case ContainerState::kRunning:
      return "running";
    case ContainerState::kExited:
      return "exited";
    case ContainerState::kKilled:
      return "killed";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Network registry

void MockNetworkRegistry::create_network(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!networks_.insert(name).second)
    throw Error("network '" + name + "' already exists");
}

bool MockNetworkRegistry::network_exists(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  return networks_.count(name) > 0;
}

void MockNetworkRegistry::register_service(const std::string& network,
                                           const std::string& name,
                                           int port) {
  std::lock_guard<std::mutex> lock(mu_);
  services_[{network, name}] = port;
}

void MockNetworkRegistry::register_shared_service(const std::string& name,
                                                  int port) {
  std::lock_guard<std::mutex> lock(mu_);
  shared_[name] = port;
}

std::optional<int> MockNetworkRegistry::resolve(
    const std::string& from_network, const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto shared = shared_.find(name);
  if (shared != shared_.end()) return shared->second;
  auto it = services_.find({from_network, name});
  if (it != services_.end()) return it->second;
  return std::nullopt;  // cross-network lookups land here
}

// ---------------------------------------------------------------------------
// Image model

struct MockRuntime::ImageMeta {
  std::string tag;
  std::map<std::string, std::string> env;
  std::vector<std::string> entrypoint;
  std::vector<std::string> cmd;
  std::string workdir = "/";
  std::string input_digest;
};

namespace {

std::string substitute_args(const std::string& line,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '$' && i + 1 < line.size()) {
      size_t start;
      size_t end;
      if (line[i + 1] == '{') {
        start = i + 2;
        end = line.find('}', start);
        if (end == std::string::npos) {
          out += line[i++];
          continue;
        }
        std::string name = line.substr(start, end - start);
        auto it = vars.find(name);
        out += it != vars.end() ? it->second : "";
        i = end + 1;
        continue;
      }
      start = i + 1;
      end = start;
      while (end < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[end])) ||
              line[end] == '_'))
        ++end;
      if (end > start) {
        std::string name = line.substr(start, end - start);
        auto it = vars.find(name);
        out += it != vars.end() ? it->second : "";
        i = end;
        continue;
      }
    }
    out += line[i++];
  }
  return out;
}

std::vector<std::string> parse_exec_form(const std::string& rest) {
  std::string t = trim(rest);
  if (!t.empty() && t[0] == '[') {
    nlohmann::json j = nlohmann::json::parse(t, nullptr, false);
    if (!j.is_discarded() && j.is_array()) {
      std::vector<std::string> out;
      for (const auto& e : j) out.push_back(e.get<std::string>());
      return out;
    }
  }
  // Shell form: run through sh -c.
  return {"/bin/sh", "-c", t};
}

// Directory content digest used only as the build cache key.
std::string tree_digest(const fs::path& root) {
  if (!fs::exists(root)) return content_hash("missing");
  std::vector<std::string> entries;
  for (const auto& e : fs::recursive_directory_iterator(
           root, fs::directory_options::skip_permission_denied)) {
    std::string rel = e.path().lexically_relative(root).string();
    if (e.is_regular_file()) {
      auto perms = fs::status(e.path()).permissions();
      bool exec = (perms & fs::perms::owner_exec) != fs::perms::none;
      entries.push_back(rel + "#f" + (exec ? "x" : "-") +
                        content_hash_file(e.path()));
    } else if (e.is_symlink()) {
      entries.push_back(rel + "#l" + fs::read_symlink(e.path()).string());
    } else if (e.is_directory()) {
      entries.push_back(rel + "#d");
    }
  }
  std::sort(entries.begin(), entries.end());
  std::string all;
  for (const auto& e : entries) all += e + "\n";
  return content_hash(all);
}

// Rewrites an absolute container path to its host location: mounts take
// precedence (longest prefix), then the sandbox copy of the image tree.
// With `sandbox_when_missing`, paths that exist neither in the sandbox nor
// on the host are treated as container-internal and land in the sandbox
// (containers may reference paths they create later, e.g. an output dir).
std::string rewrite_container_path(const std::string& value,
                                   const std::vector<Mount>& mounts,
                                   const fs::path& sandbox,
                                   bool sandbox_when_missing) {
  if (value.empty() || value[0] != '/') return value;
  const Mount* best = nullptr;
  for (const Mount& m : mounts) {
    if (value == m.container_path ||
        value.rfind(m.container_path + "/", 0) == 0) {
      if (!best || m.container_path.size() > best->container_path.size())
        best = &m;
    }
  }
  if (best) {
    std::string rest = value.substr(best->container_path.size());
    return best->host_path.string() + rest;
  }
  fs::path in_sandbox = sandbox / value.substr(1);
  if (fs::exists(in_sandbox)) return in_sandbox.string();
  if (sandbox_when_missing && !fs::exists(value)) return in_sandbox.string();
  return value;
}

class MockContainerHandle : public ContainerHandle {
 public:
  MockContainerHandle(std::string id, ContainerSpec spec, fs::path sandbox,
                      std::unique_ptr<Subprocess> proc,
                      std::chrono::milliseconds stop_grace)
      : id_(std::move(id)),
        spec_(std::move(spec)),
        sandbox_(std::move(sandbox)),
        proc_(std::move(proc)),
        stop_grace_(stop_grace) {}

  const std::string& id() const override { return id_; }
  const ContainerSpec& spec() const override { return spec_; }

  ContainerState state() override {
    ProcessStatus st = proc_->poll();
    return map_state(st);
  }

  int exit_code() override { return proc_->poll().exit_code; }

  ContainerState wait(
      std::optional<std::chrono::milliseconds> deadline) override {
    return map_state(proc_->wait(deadline));
  }

  void stop() override {
    stopped_.store(true);
    proc_->terminate(stop_grace_);
  }

  fs::path log_path() const override { return spec_.log_sink; }
  const fs::path& sandbox() const { return sandbox_; }

 private:
  ContainerState map_state(const ProcessStatus& st) {
    if (st.running) return ContainerState::kRunning;
    if (stopped_.load()) return ContainerState::kKilled;
    return ContainerState::kExited;
  }

  std::string id_;
  ContainerSpec spec_;
  fs::path sandbox_;
  std::unique_ptr<Subprocess> proc_;
  std::chrono::milliseconds stop_grace_;
  std::atomic<bool> stopped_{false};
};

}  // namespace

// ---------------------------------------------------------------------------
// MockRuntime

MockRuntime::MockRuntime(fs::path state_dir, MockRuntimeOptions opts)
    : state_dir_(std::move(state_dir)), opts_(std::move(opts)) {
  fs::create_directories(state_dir_ / "images");
  fs::create_directories(state_dir_ / "containers");
  fs::create_directories(state_dir_ / "logs");
}

fs::path MockRuntime::image_dir(const std::string& tag) const {
  std::string safe = tag;
  std::replace(safe.begin(), safe.end(), '/', '_');
  std::replace(safe.begin(), safe.end(), ':', '_');
  return state_dir_ / "images" / safe;
}

MockRuntime::ImageMeta MockRuntime::load_image_meta(
    const std::string& tag) const {
  fs::path meta_file = image_dir(tag) / "meta.json";
  if (!fs::exists(meta_file)) throw Error("image missing: " + tag);
  nlohmann::json j = nlohmann::json::parse(read_file(meta_file));
  ImageMeta meta;
  meta.tag = j.value("tag", tag);
  meta.workdir = j.value("workdir", "/");
  meta.input_digest = j.value("input_digest", "");
  for (auto& [k, v] : j.value("env", nlohmann::json::object()).items())
    meta.env[k] = v.get<std::string>();
  for (auto& e : j.value("entrypoint", nlohmann::json::array()))
    meta.entrypoint.push_back(e.get<std::string>());
  for (auto& e : j.value("cmd", nlohmann::json::array()))
    meta.cmd.push_back(e.get<std::string>());
  return meta;
}

std::string MockRuntime::build_image(const ImageBuildRequest& req) {
  if (req.tag.empty()) throw Error("build_image: empty tag");
  if (!fs::is_directory(req.context_dir))
    throw Error("build_image: context dir missing: " +
                req.context_dir.string());
  fs::path containerfile = req.containerfile.is_absolute()
                               ? req.containerfile
                               : req.context_dir / req.containerfile;
  if (!fs::exists(containerfile))
    throw Error("build_image: containerfile missing: " +
                containerfile.string());

  std::string args_flat;
  for (const auto& [k, v] : req.build_args) {
    if (k.empty()) throw Error("build_image: empty build_arg key");
    args_flat += k + "=" + v + ";";
  }
  std::string input_digest = content_hash(
      read_file(containerfile) + "\n--args--\n" + args_flat + "\n--tree--\n" +
      tree_digest(req.context_dir));

  fs::path dir = image_dir(req.tag);
  fs::path meta_file = dir / "meta.json";
  if (fs::exists(meta_file)) {
    ImageMeta existing = load_image_meta(req.tag);
    if (existing.input_digest == input_digest) {
      std::lock_guard<std::mutex> lock(mu_);
      cached_builds_.insert(req.tag);
      return req.tag;  // recorded no-op: identical inputs
    }
    fs::remove_all(dir);
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    cached_builds_.erase(req.tag);
  }

  std::string safe_tag = req.tag;
  std::replace(safe_tag.begin(), safe_tag.end(), '/', '_');
  std::replace(safe_tag.begin(), safe_tag.end(), ':', '_');
  fs::path log_file = state_dir_ / "logs" / ("build-" + safe_tag + ".log");
  std::string log_text = "building " + req.tag + "\n";
  fs::path build_dir = dir;
  build_dir += ".building";
  fs::remove_all(build_dir);
  fs::create_directories(build_dir / "root");

  ImageMeta meta;
  meta.tag = req.tag;
  meta.input_digest = input_digest;

  std::map<std::string, std::string> vars;  // declared ARGs in scope
  std::istringstream lines(read_file(containerfile));
  std::string raw;
  int lineno = 0;
  auto build_fail = [&](const std::string& msg) {
    log_text += "ERROR: " + msg + "\n";
    write_file(log_file, log_text);
    fs::remove_all(build_dir);
    throw BuildError("build of '" + req.tag + "' failed: " + msg +
                         " (log: " + log_file.string() + ")",
                     log_file);
  };
  while (std::getline(lines, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t space = line.find_first_of(" \t");
    std::string directive =
        to_lower(space == std::string::npos ? line : line.substr(0, space));
    std::string rest =
        space == std::string::npos ? "" : trim(line.substr(space + 1));
    log_text += "step " + std::to_string(lineno) + ": " + line + "\n";

    if (directive == "arg") {
      auto eq = rest.find('=');
      std::string name = trim(eq == std::string::npos ? rest
                                                      : rest.substr(0, eq));
      std::string def = eq == std::string::npos ? "" : rest.substr(eq + 1);
      auto provided = req.build_args.find(name);
      if (provided != req.build_args.end()) {
        vars[name] = provided->second;
      } else if (eq != std::string::npos) {
        vars[name] = def;
      } else {
        build_fail("line " + std::to_string(lineno) + ": build arg '" + name +
                   "' referenced by the containerfile was not provided");
      }
    } else if (directive == "from") {
      std::string base = trim(substitute_args(rest, vars));
      if (base.empty())
        build_fail("line " + std::to_string(lineno) + ": empty FROM");
      if (base != "scratch" && fs::exists(image_dir(base) / "meta.json")) {
        ImageMeta base_meta = load_image_meta(base);
        copy_tree(image_dir(base) / "root", build_dir / "root");
        meta.env = base_meta.env;
        meta.entrypoint = base_meta.entrypoint;
        meta.cmd = base_meta.cmd;
        meta.workdir = base_meta.workdir;
        log_text += "  using local base image " + base + "\n";
      } else {
        log_text += "  base " + base + " not locally built; starting empty\n";
      }
    } else if (directive == "env") {
      std::string body = substitute_args(rest, vars);
      auto eq = body.find('=');
      if (eq == std::string::npos) {
        auto sp = body.find(' ');
        if (sp == std::string::npos)
          build_fail("line " + std::to_string(lineno) + ": malformed ENV");
        meta.env[trim(body.substr(0, sp))] = trim(body.substr(sp + 1));
      } else {
        meta.env[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
    } else if (directive == "copy") {
      std::string body = substitute_args(rest, vars);
      std::vector<std::string> parts;
      for (const auto& p : split(body, ' '))
        if (!trim(p).empty()) parts.push_back(trim(p));
      if (parts.size() != 2)
        build_fail("line " + std::to_string(lineno) +
                   ": COPY expects <src> <dst>");
      fs::path src = req.context_dir / parts[0];
      std::string dst_str = parts[1];
      bool into_dir = !dst_str.empty() && dst_str.back() == '/';
      fs::path dst = build_dir / "root" /
                     fs::path(dst_str).relative_path();
      if (!fs::exists(src))
        build_fail("line " + std::to_string(lineno) + ": COPY source '" +
                   parts[0] + "' not in context");
      if (fs::is_directory(src)) {
        copy_tree(src, dst);
      } else {
        if (into_dir) dst /= src.filename();
        if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
        fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
      }
    } else if (directive == "workdir") {
      meta.workdir = trim(substitute_args(rest, vars));
    } else if (directive == "entrypoint") {
      meta.entrypoint = parse_exec_form(substitute_args(rest, vars));
    } else if (directive == "cmd") {
      meta.cmd = parse_exec_form(substitute_args(rest, vars));
    } else if (directive == "run") {
      log_text += "  (RUN recorded, not executed by the mock adapter)\n";
    } else {
      log_text += "  (directive '" + directive + "' ignored)\n";
    }
  }

  nlohmann::json meta_json = {{"tag", meta.tag},
                              {"workdir", meta.workdir},
                              {"input_digest", meta.input_digest},
                              {"env", meta.env},
                              {"entrypoint", meta.entrypoint},
                              {"cmd", meta.cmd}};
  write_file(build_dir / "meta.json", meta_json.dump(2) + "\n");
  write_file(log_file, log_text);
  std::error_code ec;
  fs::rename(build_dir, dir, ec);
  if (ec) {
    fs::remove_all(build_dir);
    throw BuildError("build of '" + req.tag + "' failed to commit: " +
                         ec.message(),
                     log_file);
  }
  return req.tag;
}

bool MockRuntime::image_exists(const std::string& tag) {
  return fs::exists(image_dir(tag) / "meta.json");
}

bool MockRuntime::last_build_was_cached(const std::string& tag) const {
  std::lock_guard<std::mutex> lock(mu_);
  return cached_builds_.count(tag) > 0;
}

std::string MockRuntime::create_network(const std::string& name) {
  if (trim(name).empty()) throw Error("create_network: empty name");
  registry_.create_network(name);
  return name;
}

ContainerHandlePtr MockRuntime::run_container(const ContainerSpec& spec) {
  if (spec.network.empty())
    throw Error("run_container: network must be nonempty");
  {
    std::set<std::string> container_paths;
    for (const Mount& m : spec.mounts)
      if (!container_paths.insert(m.container_path).second)
        throw Error("run_container: duplicate mount container_path " +
                    m.container_path);
  }
  ImageMeta meta = load_image_meta(spec.image_tag);  // throws when missing

  uint64_t seq = container_seq_.fetch_add(1);
  std::string id = spec.name.empty()
                       ? "c" + std::to_string(seq)
                       : spec.name + "-" + std::to_string(seq);
  fs::path sandbox = state_dir_ / "containers" / id;
  copy_tree(image_dir(spec.image_tag) / "root", sandbox);

  // Mounts appear inside the sandbox as symlinks so relative references in
  // scripts resolve; env rewriting below handles absolute references.
  for (const Mount& m : spec.mounts) {
    fs::path link = sandbox / fs::path(m.container_path).relative_path();
    if (link.has_parent_path()) fs::create_directories(link.parent_path());
    std::error_code ec;
    fs::remove_all(link);
    fs::create_directory_symlink(m.host_path, link, ec);
    if (ec && fs::is_regular_file(m.host_path)) {
      fs::create_symlink(m.host_path, link, ec);
    }
  }

  // The workdir must exist before paths are resolved against the sandbox.
  fs::path cwd = sandbox;
  if (meta.workdir != "/" && !meta.workdir.empty()) {
    fs::path wd = sandbox / fs::path(meta.workdir).relative_path();
    fs::create_directories(wd);
    cwd = wd;
  }

  std::map<std::string, std::string> env = meta.env;
  for (const auto& [k, v] : spec.env) env[k] = v;
  for (auto& [k, v] : env)
    v = rewrite_container_path(v, spec.mounts, sandbox,
                               /*sandbox_when_missing=*/true);

  // PATH: sandbox-mapped standard dirs (where mounts like libcrs land)
  // ahead of the host's, so in-container tools resolve like in a container.
  std::string path_value;
  for (const auto& dir : opts_.extra_path_dirs)
    path_value += dir.string() + ":";
  const char* kStdPath[] = {"/usr/local/sbin", "/usr/local/bin", "/usr/sbin",
                            "/usr/bin", "/sbin", "/bin"};
  for (const char* p : kStdPath) {
    fs::path in_sandbox = sandbox / fs::path(p).relative_path();
    if (fs::exists(in_sandbox)) path_value += in_sandbox.string() + ":";
  }
  for (size_t i = 0; i < std::size(kStdPath); ++i) {
    path_value += kStdPath[i];
    if (i + 1 < std::size(kStdPath)) path_value += ":";
  }
  if (!env.count("PATH")) env["PATH"] = path_value;
  env["HOME"] = sandbox.string();
  env["OSS_CRS_MOCK_SANDBOX"] = sandbox.string();

  std::vector<std::string> argv = spec.entrypoint_override.empty()
                                      ? meta.entrypoint
                                      : spec.entrypoint_override;
  if (argv.empty()) argv = meta.cmd;
  if (argv.empty())
    throw Error("run_container: no entrypoint for image " + spec.image_tag);
  for (auto& a : argv)
    a = rewrite_container_path(a, spec.mounts, sandbox,
                               /*sandbox_when_missing=*/false);

  fs::path log = spec.log_sink.empty()
                     ? state_dir_ / "logs" / (id + ".log")
                     : spec.log_sink;
  auto proc = std::make_unique<Subprocess>(argv, env, cwd, log);
  proc->start();
  ContainerSpec recorded = spec;
  recorded.log_sink = log;
  return std::make_shared<MockContainerHandle>(id, std::move(recorded),
                                               sandbox, std::move(proc),
                                               opts_.stop_grace);
}

std::string MockRuntime::snapshot_container_image(ContainerHandle& handle,
                                                  const std::string& tag) {
  if (handle.state() == ContainerState::kRunning)
    throw Error("snapshot: container still running");
  if (handle.state() != ContainerState::kExited || handle.exit_code() != 0)
    throw Error("snapshot: container did not exit cleanly");
  auto* mock = dynamic_cast<MockContainerHandle*>(&handle);
  if (!mock) throw Error("snapshot: handle is not a mock container");

  ImageMeta base = load_image_meta(handle.spec().image_tag);
  fs::path dir = image_dir(tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  copy_tree(mock->sandbox(), dir / "root");
  nlohmann::json meta_json = {
      {"tag", tag},
      {"workdir", base.workdir},
      {"input_digest", "snapshot-of-" + handle.id()},
      {"env", base.env},
      {"entrypoint", base.entrypoint},
      {"cmd", base.cmd}};
  write_file(dir / "meta.json", meta_json.dump(2) + "\n");
  return tag;
}

void MockRuntime::restore_tree(const std::string& image_tag,
                               const fs::path& dest) {
  if (!image_exists(image_tag)) throw Error("image missing: " + image_tag);
  copy_tree(image_dir(image_tag) / "root", dest);
}

}  // namespace oss_crs
