#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <sqlite3.h>

#include "keyinst/error.hpp"
#include "keyinst/schema.hpp"
#include "keyinst/sql/analysis.hpp"

namespace keyinst {

enum class ValueKind { Null, Integer, Real, Text };

/// One cell of a result table. NULL is distinct from every non-null value.
struct Value {
  ValueKind kind = ValueKind::Null;
  std::int64_t integer = 0;
  double real = 0.0;
  std::string text;

  static Value null() { return Value{}; }
  static Value of(std::int64_t v) { return Value{ValueKind::Integer, v, 0.0, {}}; }
  static Value of(double v) { return Value{ValueKind::Real, 0, v, {}}; }
  static Value of(std::string v) { return Value{ValueKind::Text, 0, 0.0, std::move(v)}; }
};

using ResultRow = std::vector<Value>;

struct ResultTable {
  std::size_t columns = 0;
  std::vector<ResultRow> rows;
};

namespace detail {

struct SqliteHandle {
  sqlite3* db = nullptr;
  ~SqliteHandle() {
    if (db != nullptr) sqlite3_close(db);
  }
};

struct StmtHandle {
  sqlite3_stmt* stmt = nullptr;
  ~StmtHandle() {
    if (stmt != nullptr) sqlite3_finalize(stmt);
  }
};

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

inline int progress_callback(void* opaque) {
  auto* deadline = static_cast<Deadline*>(opaque);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;  // interrupt
  }
  return 0;
}

}  // namespace detail

/// Opens the fixture read-only and materializes every row of one query.
inline ResultTable execute_sql(const std::filesystem::path& db_path, const std::string& sql,
                               double timeout_seconds = 30.0) {
  detail::SqliteHandle handle;
  if (sqlite3_open_v2(db_path.string().c_str(), &handle.db, SQLITE_OPEN_READONLY, nullptr) !=
      SQLITE_OK) {
    std::string message = handle.db != nullptr ? sqlite3_errmsg(handle.db) : "out of memory";
    throw ExecError("cannot open " + db_path.string() + ": " + message);
  }

  detail::Deadline deadline{std::chrono::steady_clock::now() +
                            std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(timeout_seconds))};
  sqlite3_progress_handler(handle.db, 1000, detail::progress_callback, &deadline);

  detail::StmtHandle stmt;
  if (sqlite3_prepare_v2(handle.db, sql.c_str(), -1, &stmt.stmt, nullptr) != SQLITE_OK) {
    throw ExecError(sqlite3_errmsg(handle.db));
  }
  if (stmt.stmt == nullptr) throw ExecError("empty statement");

  ResultTable table;
  table.columns = static_cast<std::size_t>(sqlite3_column_count(stmt.stmt));
  while (true) {
    int rc = sqlite3_step(stmt.stmt);
    if (rc == SQLITE_DONE) break;
    if (rc == SQLITE_INTERRUPT || (rc != SQLITE_ROW && deadline.expired)) {
      throw ExecTimeout("query exceeded " + std::to_string(timeout_seconds) + "s");
    }
    if (rc != SQLITE_ROW) throw ExecError(sqlite3_errmsg(handle.db));
    ResultRow row;
    row.reserve(table.columns);
    for (std::size_t i = 0; i < table.columns; ++i) {
      int col = static_cast<int>(i);
      switch (sqlite3_column_type(stmt.stmt, col)) {
        case SQLITE_NULL:
          row.push_back(Value::null());
          break;
        case SQLITE_INTEGER:
          row.push_back(Value::of(static_cast<std::int64_t>(sqlite3_column_int64(stmt.stmt, col))));
          break;
        case SQLITE_FLOAT:
          row.push_back(Value::of(sqlite3_column_double(stmt.stmt, col)));
          break;
        default: {
          const unsigned char* bytes = sqlite3_column_text(stmt.stmt, col);
          int size = sqlite3_column_bytes(stmt.stmt, col);
          row.push_back(Value::of(std::string(reinterpret_cast<const char*>(bytes),
                                              static_cast<std::size_t>(size))));
        }
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace detail {

// symmetric relative tolerance for reals
inline bool value_equal(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ValueKind::Null: return true;
    case ValueKind::Integer: return a.integer == b.integer;
    case ValueKind::Real: {
      double scale = std::max({1.0, std::fabs(a.real), std::fabs(b.real)});
      return std::fabs(a.real - b.real) <= 1e-6 * scale;
    }
    case ValueKind::Text: return a.text == b.text;
  }
  return false;
}

inline bool value_less(const Value& a, const Value& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  switch (a.kind) {
    case ValueKind::Null: return false;
    case ValueKind::Integer: return a.integer < b.integer;
    case ValueKind::Real: return a.real < b.real;
    case ValueKind::Text: return a.text < b.text;
  }
  return false;
}

inline bool row_less(const ResultRow& a, const ResultRow& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (value_less(a[i], b[i])) return true;
    if (value_less(b[i], a[i])) return false;
  }
  return a.size() < b.size();
}

inline bool row_equal(const ResultRow& a, const ResultRow& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!value_equal(a[i], b[i])) return false;
  }
  return true;
}

}  // namespace detail

/// Output equivalence: column counts must agree; rows compare positionally
/// when ordered, as multisets otherwise. Reals match within a symmetric
/// 1e-6 relative tolerance; NULL equals only NULL.
inline bool compare_results(const ResultTable& pred, const ResultTable& gold, bool ordered) {
  if (pred.columns != gold.columns) return false;
  if (pred.rows.size() != gold.rows.size()) return false;
  if (ordered) {
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
      if (!detail::row_equal(pred.rows[i], gold.rows[i])) return false;
    }
    return true;
  }
  std::vector<ResultRow> left = pred.rows;
  std::vector<ResultRow> right = gold.rows;
  std::sort(left.begin(), left.end(), detail::row_less);
  std::sort(right.begin(), right.end(), detail::row_less);
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (!detail::row_equal(left[i], right[i])) return false;
  }
  return true;
}

enum class OutcomeReason { Match, Mismatch, PredError, GoldError, Timeout };

inline constexpr std::string_view name_of(OutcomeReason r) {
  switch (r) {
    case OutcomeReason::Match: return "match";
    case OutcomeReason::Mismatch: return "mismatch";
    case OutcomeReason::PredError: return "pred_error";
    case OutcomeReason::GoldError: return "gold_error";
    case OutcomeReason::Timeout: return "timeout";
  }
  return "mismatch";
}

struct EvalOutcome {
  std::size_t task_id = 0;
  bool correct = false;
  OutcomeReason reason = OutcomeReason::Mismatch;
  std::optional<std::string> pred_error_text;
};

struct TypeStats {
  std::size_t n = 0;
  std::size_t correct = 0;
  double ex_percent = 0.0;
};

struct EvalReport {
  TypeStats overall;
  std::map<sql::StructuralType, TypeStats> per_type;
  std::vector<EvalOutcome> outcomes;
};

struct EvalOptions {
  // strict: gold execution failures stay in the denominators (as incorrect);
  // lenient: such tasks are excluded from EX denominators entirely.
  bool strict = false;
  double exec_timeout_seconds = 30.0;
  int workers = 4;
};

/// Executes prediction and gold on the task fixture and compares outputs.
/// Row order matters only when the gold query itself orders its result.
inline EvalOutcome evaluate_task(const TaskInstance& task, const std::string& predicted_sql,
                                 double exec_timeout_seconds = 30.0) {
  if (!task.gold_sql.has_value()) {
    throw FormatError("task has no gold SQL to evaluate against");
  }
  EvalOutcome outcome;

  ResultTable gold;
  try {
    gold = execute_sql(task.db_path, *task.gold_sql, exec_timeout_seconds);
  } catch (const Error&) {
    outcome.reason = OutcomeReason::GoldError;
    outcome.correct = false;
    return outcome;
  }

  bool ordered = false;
  try {
    ordered = sql::has_top_level_order_by(sql::parse_sql(*task.gold_sql));
  } catch (const ParseError&) {
    ordered = false;
  }

  ResultTable pred;
  try {
    pred = execute_sql(task.db_path, predicted_sql, exec_timeout_seconds);
  } catch (const ExecTimeout& e) {
    outcome.reason = OutcomeReason::Timeout;
    outcome.pred_error_text = e.what();
    return outcome;
  } catch (const Error& e) {
    outcome.reason = OutcomeReason::PredError;
    outcome.pred_error_text = e.what();
    return outcome;
  }

  bool match = compare_results(pred, gold, ordered);
  outcome.correct = match;
  outcome.reason = match ? OutcomeReason::Match : OutcomeReason::Mismatch;
  return outcome;
}

namespace detail {

inline double ex_percent(std::size_t correct, std::size_t n) {
  if (n == 0) return 0.0;
  return std::round(1000.0 * static_cast<double>(correct) / static_cast<double>(n)) / 10.0;
}

}  // namespace detail

/// Evaluates a full prediction set, bucketing by the dataset's type tag or,
/// when absent, by classifying the gold query.
inline EvalReport evaluate_dataset(const std::vector<TaskInstance>& tasks,
                                   const std::vector<std::string>& predictions,
                                   const EvalOptions& options = {}) {
  if (tasks.size() != predictions.size()) {
    throw LengthMismatch(tasks.size(), predictions.size());
  }

  std::vector<EvalOutcome> outcomes(tasks.size());
  int workers = std::max(1, options.workers);
  if (workers == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      outcomes[i] = evaluate_task(tasks[i], predictions[i], options.exec_timeout_seconds);
      outcomes[i].task_id = i;
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        outcomes[i] = evaluate_task(tasks[i], predictions[i], options.exec_timeout_seconds);
        outcomes[i].task_id = i;
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  report.outcomes = outcomes;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const EvalOutcome& outcome = outcomes[i];
    if (outcome.reason == OutcomeReason::GoldError && !options.strict) continue;

    sql::StructuralType type = sql::StructuralType::None;
    if (tasks[i].type_tag.has_value()) {
      type = *tasks[i].type_tag;
    } else if (tasks[i].gold_sql.has_value()) {
      try {
        type = sql::classify_structural_type(*tasks[i].gold_sql);
      } catch (const ParseError&) {
        type = sql::StructuralType::None;
      }
    }
    auto& bucket = report.per_type[type];
    ++bucket.n;
    ++report.overall.n;
    if (outcome.correct) {
      ++bucket.correct;
      ++report.overall.correct;
    }
  }
  for (auto& [type, stats] : report.per_type) {
    stats.ex_percent = detail::ex_percent(stats.correct, stats.n);
  }
  report.overall.ex_percent = detail::ex_percent(report.overall.correct, report.overall.n);
  return report;
}

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
  auto stats_json = [](const TypeStats& stats) {
    return nlohmann::json{{"n", stats.n}, {"correct", stats.correct},
                          {"ex_percent", stats.ex_percent}};
  };
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, stats] : report.per_type) {
    per_type[std::string(sql::name_of(type))] = stats_json(stats);
  }
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& outcome : report.outcomes) {
    nlohmann::json entry{{"task_id", outcome.task_id},
                         {"correct", outcome.correct},
                         {"reason", std::string(name_of(outcome.reason))}};
    if (outcome.pred_error_text.has_value()) entry["pred_error"] = *outcome.pred_error_text;
    outcomes.push_back(std::move(entry));
  }
  return nlohmann::json{{"overall", stats_json(report.overall)},
                        {"per_type", std::move(per_type)},
                        {"outcomes", std::move(outcomes)}};
}

/// Reconstructs a schema by introspecting a SQLite fixture, so evaluation
/// runs do not need the benchmark's tables file.
inline DatabaseSchema schema_from_sqlite(const std::filesystem::path& db_path) {
  detail::SqliteHandle handle;
  if (sqlite3_open_v2(db_path.string().c_str(), &handle.db, SQLITE_OPEN_READONLY, nullptr) !=
      SQLITE_OK) {
    throw FormatError("cannot open " + db_path.string());
  }

  auto query_rows = [&](const std::string& sql) {
    detail::StmtHandle stmt;
    if (sqlite3_prepare_v2(handle.db, sql.c_str(), -1, &stmt.stmt, nullptr) != SQLITE_OK) {
      throw FormatError(sqlite3_errmsg(handle.db));
    }
    std::vector<std::vector<std::string>> rows;
    while (sqlite3_step(stmt.stmt) == SQLITE_ROW) {
      std::vector<std::string> row;
      for (int i = 0; i < sqlite3_column_count(stmt.stmt); ++i) {
        const unsigned char* bytes = sqlite3_column_text(stmt.stmt, i);
        row.push_back(bytes != nullptr ? reinterpret_cast<const char*>(bytes) : "");
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };

  DatabaseSchema schema;
  schema.db_id = db_path.stem().string();
  auto tables = query_rows(
      "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%' "
      "ORDER BY rowid");
  for (const auto& table_row : tables) {
    const std::string& table_name = table_row[0];
    SchemaTable table{table_name, {}};
    for (const auto& info : query_rows("PRAGMA table_info(\"" + table_name + "\")")) {
      // cid, name, type, notnull, dflt_value, pk
      table.columns.push_back(SchemaColumn{info[1], info[2].empty() ? "TEXT" : info[2]});
      if (info[5] != "0") schema.primary_keys.push_back(TableColumn{table_name, info[1]});
    }
    schema.tables.push_back(std::move(table));
  }
  for (const auto& table : schema.tables) {
    for (const auto& fk : query_rows("PRAGMA foreign_key_list(\"" + table.name + "\")")) {
      // id, seq, table, from, to, ...
      std::string to_column = fk[4];
      if (to_column.empty()) to_column = fk[3];
      schema.foreign_keys.push_back(
          ForeignKey{TableColumn{fk[2], to_column}, TableColumn{table.name, fk[3]}});
    }
  }
  validate_schema(schema);
  return schema;
}

}  // namespace keyinst
