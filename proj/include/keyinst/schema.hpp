#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyinst/error.hpp"
#include "keyinst/sql/analysis.hpp"
#include "keyinst/sql/ast.hpp"
#include "keyinst/sql/parser.hpp"

namespace keyinst {

struct SchemaColumn {
  std::string name;
  std::string type;

  bool operator==(const SchemaColumn&) const = default;
};

struct SchemaTable {
  std::string name;
  std::vector<SchemaColumn> columns;

  bool operator==(const SchemaTable&) const = default;
};

struct TableColumn {
  std::string table;
  std::string column;

  bool operator==(const TableColumn&) const = default;
};

struct ForeignKey {
  TableColumn referenced;   // parent side
  TableColumn referencing;  // child side

  bool operator==(const ForeignKey&) const = default;
};

struct DatabaseSchema {
  std::string db_id;
  std::vector<SchemaTable> tables;
  std::vector<TableColumn> primary_keys;
  std::vector<ForeignKey> foreign_keys;

  bool operator==(const DatabaseSchema&) const = default;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline const SchemaTable* find_table(const DatabaseSchema& schema, std::string_view name) {
  std::string key = lower(name);
  for (const auto& table : schema.tables) {
    if (lower(table.name) == key) return &table;
  }
  return nullptr;
}

inline const SchemaColumn* find_column(const SchemaTable& table, std::string_view name) {
  std::string key = lower(name);
  for (const auto& column : table.columns) {
    if (lower(column.name) == key) return &column;
  }
  return nullptr;
}

}  // namespace detail

/// Checks the schema invariants: nonempty table list, unique table names,
/// unique column names per table, keys referencing existing columns.
inline void validate_schema(const DatabaseSchema& schema) {
  if (schema.tables.empty()) {
    throw FormatError("schema '" + schema.db_id + "' has no tables");
  }
  std::set<std::string> table_names;
  for (const auto& table : schema.tables) {
    if (table.name.empty()) throw FormatError("unnamed table in schema '" + schema.db_id + "'");
    if (!table_names.insert(detail::lower(table.name)).second) {
      throw FormatError("duplicate table name '" + table.name + "'");
    }
    std::set<std::string> column_names;
    for (const auto& column : table.columns) {
      if (!column_names.insert(detail::lower(column.name)).second) {
        throw FormatError("duplicate column '" + column.name + "' in table '" + table.name + "'");
      }
    }
  }
  auto check_ref = [&](const TableColumn& ref, const char* what) {
    const SchemaTable* table = detail::find_table(schema, ref.table);
    if (table == nullptr || detail::find_column(*table, ref.column) == nullptr) {
      throw FormatError(std::string(what) + " references missing column " + ref.table + "." +
                        ref.column);
    }
  };
  for (const auto& pk : schema.primary_keys) check_ref(pk, "primary key");
  for (const auto& fk : schema.foreign_keys) {
    check_ref(fk.referenced, "foreign key");
    check_ref(fk.referencing, "foreign key");
  }
}

/// One Text-to-SQL task: a schema, a question, and (when known) the gold
/// query plus the executable fixture it runs against.
struct TaskInstance {
  DatabaseSchema schema;
  std::string question;
  std::optional<std::string> gold_sql;
  std::filesystem::path db_path;
  std::optional<sql::StructuralType> type_tag;
};

/// Serializes a schema as CREATE TABLE blocks followed by one comment line
/// per foreign key. Byte-deterministic.
inline std::string render_schema_prompt(const DatabaseSchema& schema) {
  std::string out;
  for (const auto& table : schema.tables) {
    if (!out.empty()) out += '\n';
    out += "CREATE TABLE " + table.name + " (";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i > 0) out += ", ";
      out += table.columns[i].name + " " + table.columns[i].type;
    }
    out += ");";
  }
  for (const auto& fk : schema.foreign_keys) {
    out += "\n-- " + fk.referenced.table + "." + fk.referenced.column + " = " +
           fk.referencing.table + "." + fk.referencing.column;
  }
  return out;
}

namespace detail {

// Scope frame for reference resolution: aliases of real tables plus
// aliases bound to subqueries (opaque to the schema).
struct ScopeFrame {
  std::map<std::string, std::string> alias_to_table;  // lower alias -> lower table
  std::set<std::string> opaque_aliases;               // lower
  std::vector<std::string> local_tables;              // lower, in FROM order
};

struct ReferenceCollector {
  const DatabaseSchema& schema;
  std::set<std::string> tables;                                // lower
  std::set<std::pair<std::string, std::string>> columns;       // lower (table, column)

  explicit ReferenceCollector(const DatabaseSchema& s) : schema(s) {}

  void record_column(const std::string& table_lower, std::string_view column) {
    columns.insert({table_lower, lower(column)});
  }

  void record_all_columns(const std::string& table_lower) {
    const SchemaTable* table = find_table(schema, table_lower);
    if (table == nullptr) return;
    for (const auto& column : table->columns) record_column(table_lower, column.name);
  }

  void walk_select(const sql::Node& select, std::vector<ScopeFrame>& stack) {
    std::vector<ScopeFrame> core_frames;
    for (const sql::Node& child : select.children) {
      const sql::Node* core = nullptr;
      if (child.kind == sql::NodeKind::SelectCore) core = &child;
      if (child.kind == sql::NodeKind::Compound) core = &child.children[0];
      if (core != nullptr) core_frames.push_back(walk_core(*core, stack));
    }
    ScopeFrame merged;
    for (const auto& frame : core_frames) {
      merged.alias_to_table.insert(frame.alias_to_table.begin(), frame.alias_to_table.end());
      merged.opaque_aliases.insert(frame.opaque_aliases.begin(), frame.opaque_aliases.end());
      merged.local_tables.insert(merged.local_tables.end(), frame.local_tables.begin(),
                                 frame.local_tables.end());
    }
    stack.push_back(merged);
    for (const sql::Node& child : select.children) {
      if (child.kind == sql::NodeKind::OrderBy || child.kind == sql::NodeKind::Limit) {
        for (const sql::Node& term : child.children) walk_expr(term, stack);
      }
    }
    stack.pop_back();
  }

  ScopeFrame walk_core(const sql::Node& core, std::vector<ScopeFrame>& stack) {
    ScopeFrame frame;
    const sql::Node* from = nullptr;
    for (const sql::Node& child : core.children) {
      if (child.kind == sql::NodeKind::From) from = &child;
    }
    if (from != nullptr) {
      for (const sql::Node& child : from->children) {
        const sql::Node* ref = (child.kind == sql::NodeKind::Join) ? &child.children[0] : &child;
        add_table_ref(*ref, frame, stack);
      }
    }
    stack.push_back(frame);
    if (from != nullptr) {
      for (const sql::Node& child : from->children) {
        if (child.kind == sql::NodeKind::Join && child.children.size() > 1) {
          walk_expr(child.children[1], stack);
        }
      }
    }
    for (const sql::Node& child : core.children) {
      switch (child.kind) {
        case sql::NodeKind::SelectList:
        case sql::NodeKind::GroupBy:
          for (const sql::Node& item : child.children) walk_expr(item, stack);
          break;
        case sql::NodeKind::Where:
        case sql::NodeKind::Having:
          walk_expr(child.children[0], stack);
          break;
        default:
          break;
      }
    }
    stack.pop_back();
    return frame;
  }

  void add_table_ref(const sql::Node& ref, ScopeFrame& frame, std::vector<ScopeFrame>& stack) {
    if (ref.kind == sql::NodeKind::TableName) {
      const SchemaTable* table = find_table(schema, ref.text);
      if (table == nullptr) throw UnknownReference("table " + ref.text);
      std::string table_lower = lower(table->name);
      tables.insert(table_lower);
      frame.local_tables.push_back(table_lower);
      frame.alias_to_table[lower(ref.aux.empty() ? ref.text : ref.aux)] = table_lower;
      if (!ref.aux.empty()) frame.alias_to_table[table_lower] = table_lower;
      return;
    }
    if (ref.kind == sql::NodeKind::SubqueryTable) {
      walk_select(ref.children[0], stack);
      if (!ref.aux.empty()) frame.opaque_aliases.insert(lower(ref.aux));
    }
  }

  void walk_expr(const sql::Node& node, std::vector<ScopeFrame>& stack) {
    switch (node.kind) {
      case sql::NodeKind::ColumnRef: {
        resolve_column(node.text, stack);
        return;
      }
      case sql::NodeKind::Star: {
        if (node.text.empty()) {
          if (!stack.empty()) {
            for (const auto& table_lower : stack.back().local_tables) {
              record_all_columns(table_lower);
            }
          }
        } else {
          resolve_star_prefix(node.text, stack);
        }
        return;
      }
      case sql::NodeKind::Subquery:
      case sql::NodeKind::ExistsExpr:
        walk_select(node.children[0], stack);
        return;
      case sql::NodeKind::InSubquery:
        walk_expr(node.children[0], stack);
        walk_select(node.children[1], stack);
        return;
      default:
        break;
    }
    for (const sql::Node& child : node.children) walk_expr(child, stack);
  }

  void resolve_star_prefix(const std::string& prefix, std::vector<ScopeFrame>& stack) {
    std::string key = lower(prefix);
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      if (it->opaque_aliases.count(key)) return;
      auto found = it->alias_to_table.find(key);
      if (found != it->alias_to_table.end()) {
        record_all_columns(found->second);
        return;
      }
    }
    throw UnknownReference("table " + prefix);
  }

  void resolve_column(const std::string& text, std::vector<ScopeFrame>& stack) {
    auto dot = text.find('.');
    if (dot != std::string::npos) {
      std::string qualifier = lower(text.substr(0, dot));
      std::string column = text.substr(dot + 1);
      for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
        if (it->opaque_aliases.count(qualifier)) return;
        auto found = it->alias_to_table.find(qualifier);
        if (found != it->alias_to_table.end()) {
          const SchemaTable* table = find_table(schema, found->second);
          if (table == nullptr || find_column(*table, column) == nullptr) {
            throw UnknownReference("column " + text);
          }
          record_column(found->second, column);
          return;
        }
      }
      throw UnknownReference("table " + text.substr(0, dot));
    }
    // unqualified: innermost frame with a match wins; ties keep all matches
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      bool matched = false;
      for (const auto& table_lower : it->local_tables) {
        const SchemaTable* table = find_table(schema, table_lower);
        if (table != nullptr && find_column(*table, text) != nullptr) {
          record_column(table_lower, text);
          matched = true;
        }
      }
      if (matched) return;
      if (!it->opaque_aliases.empty()) return;  // may come from a subquery output
    }
    throw UnknownReference("column " + text);
  }
};

}  // namespace detail

/// Restricts a schema to exactly the tables and columns a gold query
/// touches, keeping each retained table's primary-key columns so join paths
/// stay executable. Foreign keys survive only when both endpoints survive.
inline DatabaseSchema filter_schema_by_sql(const DatabaseSchema& schema,
                                           const std::string& gold_sql) {
  sql::Node tree = sql::parse_sql(gold_sql);
  detail::ReferenceCollector collector(schema);
  std::vector<detail::ScopeFrame> stack;
  collector.walk_select(tree, stack);

  std::set<std::pair<std::string, std::string>> keep_columns = collector.columns;
  for (const auto& pk : schema.primary_keys) {
    if (collector.tables.count(detail::lower(pk.table))) {
      keep_columns.insert({detail::lower(pk.table), detail::lower(pk.column)});
    }
  }

  DatabaseSchema out;
  out.db_id = schema.db_id;
  for (const auto& table : schema.tables) {
    std::string table_lower = detail::lower(table.name);
    if (!collector.tables.count(table_lower)) continue;
    SchemaTable kept;
    kept.name = table.name;
    for (const auto& column : table.columns) {
      if (keep_columns.count({table_lower, detail::lower(column.name)})) {
        kept.columns.push_back(column);
      }
    }
    out.tables.push_back(std::move(kept));
  }
  auto column_kept = [&](const TableColumn& ref) {
    return collector.tables.count(detail::lower(ref.table)) > 0 &&
           keep_columns.count({detail::lower(ref.table), detail::lower(ref.column)}) > 0;
  };
  for (const auto& pk : schema.primary_keys) {
    if (column_kept(pk)) out.primary_keys.push_back(pk);
  }
  for (const auto& fk : schema.foreign_keys) {
    if (column_kept(fk.referenced) && column_kept(fk.referencing)) {
      out.foreign_keys.push_back(fk);
    }
  }
  return out;
}

/// Byte span replaced by a schema-qualified term.
struct SpanAnnotation {
  std::size_t begin = 0;
  std::size_t end = 0;  // half-open
  std::string replacement;
};

/// Applies span replacements right-to-left so earlier offsets stay valid.
inline std::string rewrite_question_terms(const std::string& question,
                                          std::vector<SpanAnnotation> annotations) {
  for (const auto& ann : annotations) {
    if (ann.begin > ann.end || ann.end > question.size()) {
      throw FormatError("span [" + std::to_string(ann.begin) + ", " + std::to_string(ann.end) +
                        ") out of bounds");
    }
  }
  std::sort(annotations.begin(), annotations.end(),
            [](const SpanAnnotation& a, const SpanAnnotation& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < annotations.size(); ++i) {
    if (annotations[i].begin < annotations[i - 1].end) {
      throw OverlapError("overlapping spans at byte " + std::to_string(annotations[i].begin));
    }
  }
  std::string out = question;
  for (auto it = annotations.rbegin(); it != annotations.rend(); ++it) {
    out.replace(it->begin, it->end - it->begin, it->replacement);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return doc;
}

}  // namespace detail

/// Reads a Spider-layout tables file into schemas keyed by db_id.
inline std::map<std::string, DatabaseSchema> load_spider_tables(
    const std::filesystem::path& tables_file) {
  nlohmann::json doc = detail::load_json_file(tables_file);
  if (!doc.is_array()) throw FormatError(tables_file.string() + ": expected a JSON array");

  std::map<std::string, DatabaseSchema> out;
  for (std::size_t entry_index = 0; entry_index < doc.size(); ++entry_index) {
    const auto& entry = doc[entry_index];
    try {
      DatabaseSchema schema;
      schema.db_id = entry.at("db_id").get<std::string>();

      const auto& table_names = entry.contains("table_names_original")
                                    ? entry.at("table_names_original")
                                    : entry.at("table_names");
      for (const auto& name : table_names) {
        schema.tables.push_back(SchemaTable{name.get<std::string>(), {}});
      }

      const auto& column_names = entry.contains("column_names_original")
                                     ? entry.at("column_names_original")
                                     : entry.at("column_names");
      const auto& column_types = entry.at("column_types");
      std::vector<TableColumn> columns_by_id;
      for (std::size_t i = 0; i < column_names.size(); ++i) {
        int table_index = column_names[i][0].get<int>();
        std::string column_name = column_names[i][1].get<std::string>();
        if (table_index < 0) {
          columns_by_id.push_back(TableColumn{"", column_name});
          continue;
        }
        std::string type = "TEXT";
        if (i < column_types.size()) {
          type.clear();
          for (char c : column_types[i].get<std::string>()) {
            type += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
          }
        }
        auto& table = schema.tables.at(static_cast<std::size_t>(table_index));
        table.columns.push_back(SchemaColumn{column_name, type});
        columns_by_id.push_back(TableColumn{table.name, column_name});
      }

      if (entry.contains("primary_keys")) {
        for (const auto& pk : entry.at("primary_keys")) {
          if (pk.is_array()) {  // composite keys arrive as index lists
            for (const auto& part : pk) {
              schema.primary_keys.push_back(columns_by_id.at(part.get<std::size_t>()));
            }
          } else {
            schema.primary_keys.push_back(columns_by_id.at(pk.get<std::size_t>()));
          }
        }
      }
      if (entry.contains("foreign_keys")) {
        for (const auto& fk : entry.at("foreign_keys")) {
          TableColumn referencing = columns_by_id.at(fk.at(0).get<std::size_t>());
          TableColumn referenced = columns_by_id.at(fk.at(1).get<std::size_t>());
          schema.foreign_keys.push_back(ForeignKey{referenced, referencing});
        }
      }

      validate_schema(schema);
      out[schema.db_id] = std::move(schema);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad schema entry: ") + e.what(), entry_index);
    } catch (const std::out_of_range& e) {
      throw FormatError(std::string("bad schema entry: ") + e.what(), entry_index);
    }
  }
  return out;
}

/// Loads Spider-format examples and resolves each against its schema.
/// db_path follows the db_root/<db_id>/<db_id>.sqlite layout.
inline std::vector<TaskInstance> load_spider_dataset(const std::filesystem::path& tables_file,
                                                     const std::filesystem::path& examples_file,
                                                     const std::filesystem::path& db_root) {
  auto schemas = load_spider_tables(tables_file);
  nlohmann::json doc = detail::load_json_file(examples_file);
  if (!doc.is_array()) throw FormatError(examples_file.string() + ": expected a JSON array");

  std::vector<TaskInstance> tasks;
  std::vector<std::string> missing;
  std::set<std::string> missing_seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    std::string db_id, question, query;
    try {
      db_id = entry.at("db_id").get<std::string>();
      question = entry.at("question").get<std::string>();
      query = entry.at("query").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad example: ") + e.what(), i);
    }
    auto found = schemas.find(db_id);
    if (found == schemas.end()) {
      if (missing_seen.insert(db_id).second) missing.push_back(db_id);
      continue;
    }
    TaskInstance task;
    task.schema = found->second;
    task.question = std::move(question);
    task.gold_sql = std::move(query);
    task.db_path = db_root / db_id / (db_id + ".sqlite");
    tasks.push_back(std::move(task));
  }
  if (!missing.empty()) throw MissingDatabase(std::move(missing));
  return tasks;
}

}  // namespace keyinst
