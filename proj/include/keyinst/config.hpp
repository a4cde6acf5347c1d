#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "keyinst/error.hpp"
#include "keyinst/keyinst.hpp"
#include "keyinst/llm.hpp"
#include "keyinst/pipeline.hpp"

namespace keyinst {

/// Flat key = value configuration, one pair per line. Blank lines and
/// lines starting with '#' are skipped.
inline std::map<std::string, std::string> parse_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                        ": expected key = value");
    }
    std::string key = detail::trim(trimmed.substr(0, eq));
    std::string value = detail::trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

namespace detail {

inline std::optional<std::string> config_lookup(const std::map<std::string, std::string>& values,
                                                const std::string& prefix,
                                                const std::string& key) {
  auto found = values.find(prefix + key);
  if (found != values.end()) return found->second;
  found = values.find(key);
  if (found != values.end()) return found->second;
  return std::nullopt;
}

}  // namespace detail

/// Builds one endpoint config from flat keys. Prefixed keys such as
/// "sql.model" win over shared unprefixed ones ("model").
inline GenerationConfig generation_config_from(const std::map<std::string, std::string>& values,
                                               const std::string& prefix) {
  GenerationConfig config;
  auto text = [&](const char* key) { return detail::config_lookup(values, prefix, key); };
  try {
    if (auto v = text("model")) config.model = *v;
    if (auto v = text("temperature")) config.temperature = std::stod(*v);
    if (auto v = text("max_tokens")) config.max_tokens = std::stoi(*v);
    if (auto v = text("timeout")) config.timeout_seconds = std::stod(*v);
    if (auto v = text("retries")) config.retries = std::stoi(*v);
    if (auto v = text("base_url")) config.base_url = *v;
    if (auto v = text("api_key_env")) config.api_key_env = *v;
    if (auto v = text("backoff_base")) config.backoff_base_seconds = std::stod(*v);
    if (auto v = text("in_flight_limit")) config.in_flight_limit = std::stoi(*v);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad numeric value in config: ") + e.what());
  }
  validate(config);
  return config;
}

/// Assembles the full pipeline configuration from flat keys.
inline PipelineConfig pipeline_config_from(const std::map<std::string, std::string>& values) {
  PipelineConfig config;
  auto text = [&](const char* key) -> std::optional<std::string> {
    auto found = values.find(key);
    if (found != values.end()) return found->second;
    return std::nullopt;
  };
  if (auto v = text("keyinst_source")) {
    auto kind = keyinst_source_from_name(*v);
    if (!kind.has_value()) throw ConfigError("unknown keyinst_source: " + *v);
    config.keyinst_source = *kind;
  }
  try {
    if (auto v = text("m")) config.m = std::stoi(*v);
    if (auto v = text("workers")) config.workers = std::stoi(*v);
    if (auto v = text("exec_timeout")) config.exec_timeout_seconds = std::stod(*v);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad numeric value in config: ") + e.what());
  }
  if (auto v = text("pool_path")) config.pool_path = *v;
  if (auto v = text("output_path")) config.output_path = *v;
  if (auto v = text("run_log")) config.run_log_path = *v;
  if (auto v = text("strict")) config.strict_eval = (*v == "true" || *v == "1");
  config.generator_config = generation_config_from(values, "generator.");
  config.sql_config = generation_config_from(values, "sql.");
  validate(config);
  return config;
}

}  // namespace keyinst
