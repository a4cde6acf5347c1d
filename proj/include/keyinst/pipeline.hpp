#pragma once

#include <atomic>
#include <cctype>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyinst/dataset.hpp"
#include "keyinst/error.hpp"
#include "keyinst/eval.hpp"
#include "keyinst/keyinst.hpp"
#include "keyinst/llm.hpp"
#include "keyinst/prompt.hpp"
#include "keyinst/retrieval.hpp"
#include "keyinst/schema.hpp"

namespace keyinst {

enum class KeyInstSourceKind { Icl, File, None };

inline std::optional<KeyInstSourceKind> keyinst_source_from_name(std::string_view name) {
  if (name == "icl") return KeyInstSourceKind::Icl;
  if (name == "file") return KeyInstSourceKind::File;
  if (name == "none") return KeyInstSourceKind::None;
  return std::nullopt;
}

struct PipelineConfig {
  KeyInstSourceKind keyinst_source = KeyInstSourceKind::None;
  int m = 6;
  std::filesystem::path pool_path;  // KeyInst set (icl) or per-task KeyInst file (file)
  GenerationConfig generator_config;
  GenerationConfig sql_config;
  std::filesystem::path output_path;
  std::filesystem::path run_log_path;
  int workers = 4;
  bool strict_eval = false;
  double exec_timeout_seconds = 30.0;
};

inline void validate(const PipelineConfig& config) {
  if (config.keyinst_source == KeyInstSourceKind::Icl) {
    if (config.pool_path.empty()) throw ConfigError("icl mode requires pool_path");
    if (config.m < 1) throw ConfigError("icl mode requires m >= 1");
  }
  if (config.keyinst_source == KeyInstSourceKind::File && config.pool_path.empty()) {
    throw ConfigError("file mode requires a KeyInst JSONL path");
  }
  if (config.m < 0) throw ConfigError("m must be >= 0");
}

struct PipelineProviders {
  std::shared_ptr<Provider> generator;  // KeyInst generation (icl mode)
  std::shared_ptr<Provider> sql;        // SQL generation
};

/// Pulls the first SQL statement out of model output: fenced block interior
/// when present, else everything from the first SELECT/WITH; prose after a
/// terminating semicolon is dropped and whitespace is single-spaced.
inline std::string extract_sql_from_response(const std::string& text) {
  std::string source = text;
  auto fence = text.find("```");
  if (fence != std::string::npos) {
    std::size_t body_start = fence + 3;
    // skip an optional language tag up to end of line
    auto newline = text.find('\n', body_start);
    auto closing = text.find("```", body_start);
    if (newline != std::string::npos && (closing == std::string::npos || newline < closing)) {
      body_start = newline + 1;
    }
    if (closing == std::string::npos || closing < body_start) {
      source = text.substr(body_start);
    } else {
      source = text.substr(body_start, closing - body_start);
    }
  }

  auto is_boundary = [&](std::size_t pos, std::size_t len) {
    bool left_ok = pos == 0 || !(std::isalnum(static_cast<unsigned char>(source[pos - 1])) ||
                                 source[pos - 1] == '_');
    std::size_t end = pos + len;
    bool right_ok = end >= source.size() ||
                    !(std::isalnum(static_cast<unsigned char>(source[end])) || source[end] == '_');
    return left_ok && right_ok;
  };
  std::string lower = detail::lower_copy(source);
  std::size_t start = std::string::npos;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (i + 6 <= lower.size() && lower.compare(i, 6, "select") == 0 && is_boundary(i, 6)) {
      start = i;
      break;
    }
    if (i + 4 <= lower.size() && lower.compare(i, 4, "with") == 0 && is_boundary(i, 4)) {
      start = i;
      break;
    }
  }
  if (start == std::string::npos) throw NoSqlFound("no SELECT or WITH in response");
  std::string sql = source.substr(start);

  // cut after the first statement-terminating semicolon (quotes respected)
  bool in_string = false;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    if (sql[i] == '\'') in_string = !in_string;
    if (sql[i] == ';' && !in_string) {
      sql.resize(i + 1);
      break;
    }
  }

  std::string normalized;
  bool pending_space = false;
  for (char c : sql) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!normalized.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      normalized += ' ';
      pending_space = false;
    }
    normalized += c;
  }
  return normalized;
}

/// Everything run_pipeline needs beyond the task itself: validated config,
/// providers, and the preloaded KeyInst pool or per-task KeyInst file.
struct PipelineContext {
  PipelineConfig config;
  PipelineProviders providers;
  std::vector<KeyInstRecord> pool;               // icl mode
  std::map<std::size_t, KeyInst> file_keyinsts;  // file mode, keyed by task id
};

/// Loads per-task KeyInsts from JSON Lines {task_id, analysis, keywords}.
inline std::map<std::size_t, KeyInst> load_task_keyinsts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::map<std::size_t, KeyInst> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) {
      ++index;
      continue;
    }
    try {
      nlohmann::json entry = nlohmann::json::parse(line);
      std::size_t task_id = entry.at("task_id").get<std::size_t>();
      sql::KeywordSet keywords;
      for (const auto& name : entry.at("keywords")) {
        auto k = sql::keyword_from_name(name.get<std::string>());
        if (k.has_value()) keywords.insert(*k);
      }
      out[task_id] = make_keyinst(entry.at("analysis").get<std::string>(),
                                  sql::filter_by_priority(keywords));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad KeyInst entry: ") + e.what(), index);
    }
    ++index;
  }
  return out;
}

inline PipelineContext make_pipeline_context(
    PipelineConfig config, PipelineProviders providers,
    const std::map<std::string, DatabaseSchema>& schemas = {}) {
  validate(config);
  PipelineContext ctx;
  ctx.config = std::move(config);
  ctx.providers = std::move(providers);
  if (ctx.config.keyinst_source == KeyInstSourceKind::Icl) {
    ctx.pool = load_keyinst_records(ctx.config.pool_path, schemas);
  } else if (ctx.config.keyinst_source == KeyInstSourceKind::File) {
    ctx.file_keyinsts = load_task_keyinsts(ctx.config.pool_path);
  }
  return ctx;
}

struct PipelineRunResult {
  std::optional<KeyInst> keyinst;
  std::string predicted_sql;
  std::string keyinst_prompt_hash;  // empty when no generation step ran
  std::string sql_prompt_hash;
  std::string raw_generator_response;
  std::string raw_sql_response;
  std::vector<std::string> warnings;
};

/// One task through the two-step flow: obtain a KeyInst per the configured
/// source, then prompt for SQL. A KeyInst that cannot be parsed degrades to
/// running without one; a response with no SQL yields an empty prediction.
inline PipelineRunResult run_pipeline(const TaskInstance& task, const PipelineContext& ctx,
                                      std::size_t task_id = 0) {
  PipelineRunResult result;

  switch (ctx.config.keyinst_source) {
    case KeyInstSourceKind::Icl: {
      auto demos = select_demonstrations(task, ctx.pool, static_cast<std::size_t>(ctx.config.m));
      if (demos.empty()) {
        result.warnings.push_back("no usable demonstrations; continuing without KeyInst");
        break;
      }
      Prompt prompt = build_keyinst_icl_prompt(task, demos);
      result.keyinst_prompt_hash = prompt_hash(prompt);
      result.raw_generator_response = ctx.providers.generator->generate(prompt);
      try {
        result.keyinst = parse_keyinst(result.raw_generator_response);
      } catch (const KeyInstParseError& e) {
        result.warnings.push_back(std::string("unparseable KeyInst: ") + e.what());
      }
      break;
    }
    case KeyInstSourceKind::File: {
      auto found = ctx.file_keyinsts.find(task_id);
      if (found != ctx.file_keyinsts.end()) {
        result.keyinst = found->second;
      } else {
        result.warnings.push_back("no KeyInst for task " + std::to_string(task_id) + " in file");
      }
      break;
    }
    case KeyInstSourceKind::None:
      break;
  }

  Prompt sql_prompt = build_zero_shot_sql_prompt(task.schema, task.question, result.keyinst);
  result.sql_prompt_hash = prompt_hash(sql_prompt);
  result.raw_sql_response = ctx.providers.sql->generate(sql_prompt);
  try {
    result.predicted_sql = extract_sql_from_response(result.raw_sql_response);
  } catch (const NoSqlFound& e) {
    result.warnings.push_back(e.what());
    result.predicted_sql.clear();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Batch driver with an append-only, resumable run log
// ---------------------------------------------------------------------------

struct RunLogEntry {
  std::size_t task_id = 0;
  bool success = false;
  std::string predicted_sql;
  nlohmann::json record;
};

/// Last record per task id wins, matching append-only resume semantics.
inline std::map<std::size_t, RunLogEntry> load_run_log(const std::filesystem::path& path) {
  std::map<std::size_t, RunLogEntry> entries;
  std::ifstream in(path);
  if (!in) return entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      continue;  // torn tail line from an interrupted run
    }
    if (!record.contains("task_id")) continue;
    RunLogEntry entry;
    entry.task_id = record.at("task_id").get<std::size_t>();
    entry.success = !record.contains("error");
    if (record.contains("predicted_sql")) {
      entry.predicted_sql = record.at("predicted_sql").get<std::string>();
    }
    entry.record = std::move(record);
    entries[entry.task_id] = std::move(entry);
  }
  return entries;
}

struct BatchResult {
  std::vector<std::string> predictions;
  std::optional<EvalReport> report;
  std::size_t attempted = 0;
  std::size_t failed = 0;  // provider failures left after retries
};

/// Runs every task not already completed in the run log, appending one log
/// record per task in input order. Predictions are rewritten for the whole
/// task list; evaluation runs when every task carries gold SQL.
inline BatchResult run_batch(const std::vector<TaskInstance>& tasks, const PipelineContext& ctx) {
  auto previous = load_run_log(ctx.config.run_log_path);

  struct Slot {
    bool done = false;
    bool failed = false;
    PipelineRunResult result;
    std::string error;
  };
  std::vector<Slot> slots(tasks.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto found = previous.find(i);
    if (found != previous.end() && found->second.success) {
      slots[i].done = true;
      slots[i].result.predicted_sql = found->second.predicted_sql;
    } else {
      pending.push_back(i);
    }
  }

  BatchResult batch;
  batch.attempted = pending.size();

  std::mutex mutex;
  std::condition_variable ready;
  std::size_t next_pending = 0;
  std::map<std::size_t, Slot> finished;

  auto worker = [&] {
    while (true) {
      std::size_t index;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next_pending >= pending.size()) return;
        index = pending[next_pending++];
      }
      Slot slot;
      try {
        slot.result = run_pipeline(tasks[index], ctx, index);
      } catch (const Error& e) {
        slot.failed = true;
        slot.error = e.what();
      }
      slot.done = true;
      {
        std::lock_guard<std::mutex> lock(mutex);
        finished[index] = std::move(slot);
      }
      ready.notify_all();
    }
  };

  int workers = std::max(1, ctx.config.workers);
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker);

  std::ofstream log;
  if (!ctx.config.run_log_path.empty()) {
    log.open(ctx.config.run_log_path, std::ios::app);
    if (!log) {
      for (auto& t : threads) t.join();
      throw FormatError("cannot open run log " + ctx.config.run_log_path.string());
    }
  }

  for (std::size_t index : pending) {
    std::unique_lock<std::mutex> lock(mutex);
    ready.wait(lock, [&] { return finished.count(index) > 0; });
    Slot slot = std::move(finished.at(index));
    finished.erase(index);
    lock.unlock();

    nlohmann::json record;
    record["task_id"] = index;
    if (slot.failed) {
      record["error"] = slot.error;
      ++batch.failed;
    } else {
      const PipelineRunResult& r = slot.result;
      record["predicted_sql"] = r.predicted_sql;
      record["sql_prompt_hash"] = r.sql_prompt_hash;
      record["raw_sql_response"] = r.raw_sql_response;
      if (!r.keyinst_prompt_hash.empty()) {
        record["keyinst_prompt_hash"] = r.keyinst_prompt_hash;
        record["raw_generator_response"] = r.raw_generator_response;
      }
      if (r.keyinst.has_value()) record["keyinst"] = render_keyinst(*r.keyinst);
      if (!r.warnings.empty()) record["warnings"] = r.warnings;
    }
    if (log.is_open()) {
      log << record.dump() << '\n';
      log.flush();
    }
    slots[index] = std::move(slot);
  }
  for (auto& t : threads) t.join();

  batch.predictions.reserve(tasks.size());
  for (const auto& slot : slots) batch.predictions.push_back(slot.result.predicted_sql);

  if (!ctx.config.output_path.empty()) {
    std::ofstream out(ctx.config.output_path, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + ctx.config.output_path.string());
    for (std::size_t i = 0; i < batch.predictions.size(); ++i) {
      nlohmann::json line{{"task_id", i}, {"sql", batch.predictions[i]}};
      out << line.dump() << '\n';
    }
  }

  bool all_gold = !tasks.empty();
  for (const auto& task : tasks) {
    if (!task.gold_sql.has_value()) all_gold = false;
  }
  if (all_gold) {
    EvalOptions eval_options;
    eval_options.strict = ctx.config.strict_eval;
    eval_options.exec_timeout_seconds = ctx.config.exec_timeout_seconds;
    eval_options.workers = ctx.config.workers;
    batch.report = evaluate_dataset(tasks, batch.predictions, eval_options);
  }
  return batch;
}

}  // namespace keyinst
