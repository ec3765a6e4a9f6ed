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

#include "oss_crs/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>

#include "oss_crs/units.hpp"
#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

constexpr int64_t kMinMemoryBytes = 64LL * 1024 * 1024;

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) return;
  for (const auto& kv : node) {
    std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      return false;
  }
  return true;
}

std::string require_string(const YAML::Node& node, const std::string& key,
                           const std::string& where) {
  if (!node[key] || !node[key].IsScalar())
    throw ConfigError(where + ": missing required key '" + key + "'");
  return node[key].as<std::string>();
}

std::string optional_string(const YAML::Node& node, const std::string& key,
                            const std::string& fallback = "") {
  if (!node[key]) return fallback;
  return node[key].as<std::string>();
}

std::vector<std::string> string_list(const YAML::Node& node,
                                     const std::string& where) {
  std::vector<std::string> out;
  if (!node) return out;
  if (!node.IsSequence())
    throw ConfigError(where + ": expected a list");
  for (const auto& item : node) out.push_back(item.as<std::string>());
  return out;
}

Language parse_language(const std::string& text, const std::string& where) {
  std::string l = to_lower(trim(text));
  if (l == "c") return Language::kC;
  if (l == "cpp" || l == "c++") return Language::kCpp;
  if (l == "java") return Language::kJava;
  throw ConfigError(where + ": unknown language '" + text + "'");
}

std::map<std::string, std::string> parse_build_args(const YAML::Node& node,
                                                    const std::string& where) {
  std::map<std::string, std::string> out;
  if (!node) return out;
  if (!node.IsMap()) throw ConfigError(where + ": build_args must be a map");
  for (const auto& kv : node) {
    std::string key = kv.first.as<std::string>();
    if (key.empty()) throw ConfigError(where + ": empty build_args key");
    out[key] = kv.second.as<std::string>();
  }
  return out;
}

MountKind parse_mount_kind(const std::string& text, const std::string& where) {
  std::string m = to_lower(trim(text));
  if (m == "fetch") return MountKind::kFetch;
  if (m == "build-outputs" || m == "build-output")
    return MountKind::kBuildOutputs;
  if (m == "shared") return MountKind::kShared;
  throw ConfigError(where + ": unknown mount kind '" + text + "'");
}

ImageBuildStep parse_image_step(const YAML::Node& node,
                                const std::string& where) {
  check_keys(node, {"name", "dockerfile", "context", "build_args"}, where);
  ImageBuildStep step;
  step.name = require_string(node, "name", where);
  if (!is_identifier(step.name))
    throw ConfigError(where + ": step name must be an identifier: '" +
                      step.name + "'");
  step.dockerfile = require_string(node, "dockerfile", where);
  step.context = optional_string(node, "context", ".");
  step.build_args = parse_build_args(node["build_args"], where);
  return step;
}

TargetBuildStep parse_target_step(const YAML::Node& node,
                                  const std::string& where) {
  check_keys(node, {"name", "dockerfile", "context", "entrypoint"}, where);
  TargetBuildStep step;
  step.name = require_string(node, "name", where);
  if (!is_identifier(step.name))
    throw ConfigError(where + ": step name must be an identifier: '" +
                      step.name + "'");
  step.dockerfile = require_string(node, "dockerfile", where);
  step.context = optional_string(node, "context", ".");
  step.entrypoint = string_list(node["entrypoint"], where + ".entrypoint");
  return step;
}

RunContainerSpec parse_run_container(const YAML::Node& node,
                                     const std::string& where) {
  check_keys(node, {"dockerfile", "context", "entrypoint", "mounts"}, where);
  RunContainerSpec spec;
  spec.dockerfile = require_string(node, "dockerfile", where);
  spec.context = optional_string(node, "context", ".");
  spec.entrypoint = string_list(node["entrypoint"], where + ".entrypoint");
  if (node["mounts"]) {
    for (const std::string& m : string_list(node["mounts"], where + ".mounts"))
      spec.mounts.insert(parse_mount_kind(m, where));
  } else {
    spec.mounts = {MountKind::kFetch, MountKind::kBuildOutputs,
                   MountKind::kShared};
  }
  return spec;
}

ModelRoute parse_model_route(const YAML::Node& node, const std::string& where) {
  check_keys(node, {"model_name", "params"}, where);
  ModelRoute route;
  route.alias = require_string(node, "model_name", where);
  if (trim(route.alias).empty())
    throw ConfigError(where + ": empty model_name");
  const YAML::Node& params = node["params"];
  if (!params || !params.IsMap())
    throw ConfigError(where + ": missing 'params' map");
  check_keys(params,
             {"model", "api_base", "api_key_env", "price_in", "price_out"},
             where + ".params");
  route.provider_model = require_string(params, "model", where + ".params");
  route.endpoint = optional_string(params, "api_base");
  route.credential_ref = optional_string(params, "api_key_env");
  route.price_in =
      parse_price_micro(optional_string(params, "price_in", "0"));
  route.price_out =
      parse_price_micro(optional_string(params, "price_out", "0"));
  return route;
}

std::vector<ModelRoute> parse_route_list(const YAML::Node& node,
                                         const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + ": expected a list");
  std::vector<ModelRoute> routes;
  std::set<std::string> seen;
  for (size_t i = 0; i < node.size(); ++i) {
    ModelRoute route =
        parse_model_route(node[i], where + "[" + std::to_string(i) + "]");
    if (!seen.insert(route.alias).second)
      throw ConfigError(where + ": duplicate model alias '" + route.alias +
                        "'");
    routes.push_back(std::move(route));
  }
  return routes;
}

LlmSettings parse_llm(const YAML::Node& node, const fs::path& base_dir) {
  LlmSettings llm;
  if (!node) return llm;  // absent: disabled
  check_keys(node, {"mode", "models", "models_file", "endpoint", "key",
                    "key_env"},
             "llm");
  std::string mode = to_lower(require_string(node, "mode", "llm"));
  if (mode == "internal")
    llm.mode = LlmMode::kInternal;
  else if (mode == "external")
    llm.mode = LlmMode::kExternal;
  else if (mode == "disabled")
    llm.mode = LlmMode::kDisabled;
  else
    throw ConfigError("llm: unknown mode '" + mode + "'");

  if (node["models"])
    llm.model_routes = parse_route_list(node["models"], "llm.models");
  if (node["models_file"]) {
    auto file_routes = parse_model_routes_file(
        base_dir / node["models_file"].as<std::string>());
    for (auto& r : file_routes) {
      for (const auto& existing : llm.model_routes)
        if (existing.alias == r.alias)
          throw ConfigError("llm: duplicate model alias '" + r.alias +
                            "' between models and models_file");
      llm.model_routes.push_back(std::move(r));
    }
  }
  llm.external_endpoint = optional_string(node, "endpoint");
  llm.external_key = optional_string(node, "key");
  llm.external_key_env = optional_string(node, "key_env");

  switch (llm.mode) {
    case LlmMode::kInternal:
      if (llm.model_routes.empty())
        throw ConfigError("llm: internal mode requires a nonempty model list");
      if (!llm.external_endpoint.empty())
        throw ConfigError("llm: 'endpoint' is only valid in external mode");
      break;
    case LlmMode::kExternal:
      if (trim(llm.external_endpoint).empty())
        throw ConfigError("llm: external mode requires 'endpoint'");
      if (!llm.model_routes.empty())
        throw ConfigError("llm: model routes are only valid in internal mode");
      break;
    case LlmMode::kDisabled:
      if (!llm.model_routes.empty() || !llm.external_endpoint.empty())
        throw ConfigError(
            "llm: disabled mode must not configure models or endpoint");
      break;
  }
  return llm;
}

}  // namespace

std::string to_string(CrsType t) {
  return t == CrsType::kBugFinding ? "bug-finding" : "bug-fixing";
}

std::string to_string(Language l) {
  switch (l) {
    case Language::kC:
      return "c";
    case Language::kCpp:
      return "cpp";
    default:
      return "java";
  }
}

std::string to_string(LlmMode m) {
  switch (m) {
    case LlmMode::kInternal:
      return "internal";
    case LlmMode::kExternal:
      return "external";
    default:
      return "disabled";
  }
}

CrsManifest parse_manifest(const std::string& document) {
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("crs.yaml: YAML parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("crs.yaml: top level must be a map");
  check_keys(root,
             {"name", "type", "languages", "required_llms", "prepare_phase",
              "target_build_phase", "crs_run_phase"},
             "crs.yaml");

  CrsManifest m;
  m.base_dir = ".";
  m.name = require_string(root, "name", "crs.yaml");
  if (!is_identifier(m.name))
    throw ConfigError("crs.yaml: name must be a nonempty identifier, got '" +
                      m.name + "'");

  std::string type = to_lower(require_string(root, "type", "crs.yaml"));
  if (type == "bug-finding")
    m.crs_type = CrsType::kBugFinding;
  else if (type == "bug-fixing")
    m.crs_type = CrsType::kBugFixing;
  else
    throw ConfigError("crs.yaml: unknown crs type '" + type + "'");

  for (const std::string& l :
       string_list(root["languages"], "crs.yaml.languages"))
    m.languages.insert(parse_language(l, "crs.yaml.languages"));

  m.required_llms = string_list(root["required_llms"],
                                "crs.yaml.required_llms");
  for (const std::string& alias : m.required_llms)
    if (trim(alias).empty())
      throw ConfigError("crs.yaml: required_llms entries must be nonempty");

  if (root["prepare_phase"]) {
    const YAML::Node& prep = root["prepare_phase"];
    if (!prep.IsSequence() && !prep.IsNull())
      throw ConfigError("crs.yaml: prepare_phase must be a list");
    std::set<std::string> names;
    for (size_t i = 0; prep.IsSequence() && i < prep.size(); ++i) {
      auto step = parse_image_step(
          prep[i], "crs.yaml.prepare_phase[" + std::to_string(i) + "]");
      if (!names.insert(step.name).second)
        throw ConfigError("crs.yaml: duplicate prepare step name '" +
                          step.name + "'");
      m.prepare_phase.push_back(std::move(step));
    }
  }

  if (root["target_build_phase"]) {
    const YAML::Node& tb = root["target_build_phase"];
    if (!tb.IsSequence() && !tb.IsNull())
      throw ConfigError("crs.yaml: target_build_phase must be a list");
    std::set<std::string> names;
    for (size_t i = 0; tb.IsSequence() && i < tb.size(); ++i) {
      auto step = parse_target_step(
          tb[i], "crs.yaml.target_build_phase[" + std::to_string(i) + "]");
      if (!names.insert(step.name).second)
        throw ConfigError("crs.yaml: duplicate build step name '" + step.name +
                          "'");
      m.target_build_phase.push_back(std::move(step));
    }
  }

  const YAML::Node& run = root["crs_run_phase"];
  if (!run || !run.IsMap() || run.size() == 0)
    throw ConfigError("crs.yaml: crs_run_phase has >=1 entry");
  for (const auto& kv : run) {
    std::string cname = kv.first.as<std::string>();
    if (!is_identifier(cname))
      throw ConfigError("crs.yaml: container name must be an identifier: '" +
                        cname + "'");
    for (const auto& [existing, unused] : m.crs_run_phase)
      if (existing == cname)
        throw ConfigError("crs.yaml: duplicate container name '" + cname +
                          "'");
    m.crs_run_phase.emplace_back(
        cname, parse_run_container(kv.second, "crs.yaml.crs_run_phase." +
                                                  cname));
  }
  return m;
}

CrsManifest parse_manifest_file(const fs::path& path) {
  CrsManifest m;
  try {
    m = parse_manifest(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return m;
}

namespace {

ComposeConfig parse_compose_with_base(const std::string& document,
                                      const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("crs-compose.yaml: YAML parse error: ") +
                      e.what());
  }
  if (!root.IsMap())
    throw ConfigError("crs-compose.yaml: top level must be a map");
  check_keys(root, {"target", "crses", "llm", "timeout", "out_dir", "inputs"},
             "crs-compose.yaml");

  ComposeConfig cfg;
  cfg.base_dir = base_dir;

  const YAML::Node& target = root["target"];
  if (!target || !target.IsMap())
    throw ConfigError("crs-compose.yaml: missing 'target' section");
  check_keys(target,
             {"project", "source", "harness", "language", "build_command",
              "source_root", "test_command"},
             "target");
  cfg.target.project = require_string(target, "project", "target");
  cfg.target.source_dir = optional_string(target, "source");
  cfg.target.harness = require_string(target, "harness", "target");
  if (target["language"])
    cfg.target.language =
        parse_language(target["language"].as<std::string>(), "target");
  cfg.target.build_command =
      optional_string(target, "build_command", cfg.target.build_command);
  cfg.target.source_root =
      optional_string(target, "source_root", cfg.target.source_root);
  cfg.target.test_command = optional_string(target, "test_command");

  const YAML::Node& crses = root["crses"];
  if (!crses || !crses.IsSequence() || crses.size() == 0)
    throw ConfigError("crs-compose.yaml: 'crses' must list at least one CRS");
  std::set<std::string> names;
  for (size_t i = 0; i < crses.size(); ++i) {
    std::string where = "crses[" + std::to_string(i) + "]";
    check_keys(crses[i], {"name", "cpuset", "memory", "llm_budget"}, where);
    CrsDeployment dep;
    dep.crs_ref = require_string(crses[i], "name", where);
    if (!names.insert(dep.crs_ref).second)
      throw ConfigError("crs-compose.yaml: duplicate CRS name '" +
                        dep.crs_ref + "'");
    dep.cpuset = CpuSet::parse(require_string(crses[i], "cpuset", where));
    dep.memory_text = require_string(crses[i], "memory", where);
    dep.memory_limit = parse_memory_bytes(dep.memory_text);
    if (dep.memory_limit < kMinMemoryBytes)
      throw ConfigError(where + ": memory_limit must be >= 64 MiB, got " +
                        dep.memory_text);
    if (crses[i]["llm_budget"])
      dep.llm_budget =
          parse_money_cents(crses[i]["llm_budget"].as<std::string>());
    cfg.crs_entries.push_back(std::move(dep));
  }

  cfg.llm = parse_llm(root["llm"], cfg.base_dir);

  if (root["timeout"]) {
    auto t = parse_duration(root["timeout"].as<std::string>());
    if (t.count() <= 0)
      throw ConfigError("crs-compose.yaml: timeout must be > 0");
    cfg.run_timeout = t;
  }
  if (root["out_dir"]) cfg.out_dir = root["out_dir"].as<std::string>();

  if (root["inputs"]) {
    const YAML::Node& inputs = root["inputs"];
    check_keys(inputs, {"corpus_dir", "diff", "sarif"}, "inputs");
    InitialInputsConfig ic;
    if (inputs["corpus_dir"])
      ic.corpus_dir = fs::path(inputs["corpus_dir"].as<std::string>());
    if (inputs["diff"]) ic.diff_file = fs::path(inputs["diff"].as<std::string>());
    if (inputs["sarif"])
      ic.sarif_file = fs::path(inputs["sarif"].as<std::string>());
    cfg.initial_inputs = std::move(ic);
  }
  return cfg;
}

}  // namespace

ComposeConfig parse_compose(const std::string& document) {
  return parse_compose_with_base(document, ".");
}

ComposeConfig parse_compose_file(const fs::path& path) {
  ComposeConfig cfg;
  std::string text = read_file(path);
  fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  try {
    cfg = parse_compose_with_base(text, base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  // Paths in the compose file are relative to its directory.
  auto rebase = [&](fs::path p) {
    return p.is_absolute() ? p : base / p;
  };
  if (!cfg.target.source_dir.empty())
    cfg.target.source_dir = rebase(cfg.target.source_dir);
  cfg.out_dir = rebase(cfg.out_dir);
  if (cfg.initial_inputs) {
    if (cfg.initial_inputs->corpus_dir)
      cfg.initial_inputs->corpus_dir = rebase(*cfg.initial_inputs->corpus_dir);
    if (cfg.initial_inputs->diff_file)
      cfg.initial_inputs->diff_file = rebase(*cfg.initial_inputs->diff_file);
    if (cfg.initial_inputs->sarif_file)
      cfg.initial_inputs->sarif_file = rebase(*cfg.initial_inputs->sarif_file);
  }
  return cfg;
}

std::vector<ModelRoute> parse_model_routes_file(const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::Load(read_file(path));
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string() + ": YAML parse error: " + e.what());
  }
  if (!root.IsMap() || !root["model_list"])
    throw ConfigError(path.string() + ": expected top-level 'model_list'");
  check_keys(root, {"model_list"}, path.string());
  return parse_route_list(root["model_list"], path.string() + ".model_list");
}

fs::path resolve_manifest_path(const fs::path& base_dir,
                               const std::string& crs_ref) {
  std::string ref = trim(crs_ref);
  bool looks_like_path = ref.find('/') != std::string::npos ||
                         ref.ends_with(".yaml") || ref.ends_with(".yml");
  std::vector<fs::path> candidates;
  if (looks_like_path) {
    fs::path p(ref);
    candidates.push_back(p.is_absolute() ? p : base_dir / p);
  } else {
    candidates.push_back(base_dir / ref / "crs.yaml");
    candidates.push_back(base_dir / "crses" / ref / "crs.yaml");
  }
  for (const auto& c : candidates)
    if (fs::exists(c)) return c;
  std::string tried;
  for (const auto& c : candidates) {
    if (!tried.empty()) tried += ", ";
    tried += c.string();
  }
  throw ConfigError("cannot resolve CRS manifest for '" + crs_ref +
                    "' (tried: " + tried + ")");
}

}  // namespace oss_crs
