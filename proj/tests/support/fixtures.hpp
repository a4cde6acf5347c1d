#pragma once

// Shared in-memory schemas and on-disk SQLite fixtures for the unit and
// acceptance suites.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <sqlite3.h>

#include "keyinst/schema.hpp"

namespace testsupport {

inline keyinst::DatabaseSchema shop_emp_schema() {
  keyinst::DatabaseSchema schema;
  schema.db_id = "retail_mini";
  schema.tables = {
      {"shop", {{"name", "TEXT"}, {"id", "INTEGER"}, {"addr", "TEXT"}}},
      {"emp", {{"id", "INTEGER"}, {"age", "INTEGER"}}},
  };
  schema.primary_keys = {{"shop", "id"}, {"emp", "id"}};
  return schema;
}

inline keyinst::DatabaseSchema retail_schema() {
  keyinst::DatabaseSchema schema;
  schema.db_id = "retail";
  schema.tables = {
      {"shop", {{"id", "INTEGER"}, {"name", "TEXT"}, {"city", "TEXT"}, {"revenue", "REAL"}}},
      {"device", {{"id", "INTEGER"}, {"shop_id", "INTEGER"}, {"model", "TEXT"}, {"price", "REAL"}}},
      {"employee",
       {{"id", "INTEGER"}, {"shop_id", "INTEGER"}, {"name", "TEXT"}, {"age", "INTEGER"}}},
      {"supplier", {{"id", "INTEGER"}, {"name", "TEXT"}, {"city", "TEXT"}}},
  };
  schema.primary_keys = {{"shop", "id"}, {"device", "id"}, {"employee", "id"}, {"supplier", "id"}};
  schema.foreign_keys = {
      {{"shop", "id"}, {"device", "shop_id"}},
      {{"shop", "id"}, {"employee", "shop_id"}},
  };
  return schema;
}

inline void exec_all(sqlite3* db, const std::vector<std::string>& statements) {
  for (const auto& sql : statements) {
    char* error = nullptr;
    if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &error) != SQLITE_OK) {
      std::string message = error != nullptr ? error : "unknown sqlite error";
      sqlite3_free(error);
      throw std::runtime_error("fixture setup failed: " + message + " in: " + sql);
    }
  }
}

/// db_root/retail/retail.sqlite with deterministic contents.
inline std::filesystem::path build_retail_db(const std::filesystem::path& db_root) {
  std::filesystem::path dir = db_root / "retail";
  std::filesystem::create_directories(dir);
  std::filesystem::path path = dir / "retail.sqlite";
  std::filesystem::remove(path);
  sqlite3* db = nullptr;
  if (sqlite3_open(path.string().c_str(), &db) != SQLITE_OK) {
    throw std::runtime_error("cannot create " + path.string());
  }
  exec_all(db, {
      "CREATE TABLE shop (id INTEGER PRIMARY KEY, name TEXT, city TEXT, revenue REAL);",
      "CREATE TABLE device (id INTEGER PRIMARY KEY, shop_id INTEGER REFERENCES shop(id), "
      "model TEXT, price REAL);",
      "CREATE TABLE employee (id INTEGER PRIMARY KEY, shop_id INTEGER REFERENCES shop(id), "
      "name TEXT, age INTEGER);",
      "CREATE TABLE supplier (id INTEGER PRIMARY KEY, name TEXT, city TEXT);",
      "INSERT INTO shop VALUES (1, 'Alpha', 'Berlin', 120.5);",
      "INSERT INTO shop VALUES (2, 'Beta', 'Munich', 80.0);",
      "INSERT INTO shop VALUES (3, 'Gamma', 'Berlin', 200.25);",
      "INSERT INTO shop VALUES (4, 'Delta', 'Hamburg', 45.75);",
      "INSERT INTO shop VALUES (5, 'Omega', 'Cologne', 150.0);",
      "INSERT INTO device VALUES (1, 1, 'D-100', 19.99);",
      "INSERT INTO device VALUES (2, 1, 'D-200', 49.5);",
      "INSERT INTO device VALUES (3, 2, 'D-100', 21.0);",
      "INSERT INTO device VALUES (4, 3, 'D-300', 99.0);",
      "INSERT INTO device VALUES (5, 3, 'D-400', 5.25);",
      "INSERT INTO device VALUES (6, 4, 'D-500', 62.0);",
      "INSERT INTO employee VALUES (1, 1, 'Ana', 34);",
      "INSERT INTO employee VALUES (2, 1, 'Bo', 51);",
      "INSERT INTO employee VALUES (3, 2, 'Cleo', 28);",
      "INSERT INTO employee VALUES (4, 3, 'Dio', 45);",
      "INSERT INTO employee VALUES (5, 4, 'Eve', 23);",
      "INSERT INTO employee VALUES (6, 5, 'Flo', 61);",
      "INSERT INTO supplier VALUES (1, 'SupplyCo', 'Berlin');",
      "INSERT INTO supplier VALUES (2, 'PartsInc', 'Dresden');",
      "INSERT INTO supplier VALUES (3, 'Wares', 'Munich');",
  });
  sqlite3_close(db);
  return path;
}

/// db_root/school/school.sqlite with deterministic contents.
inline std::filesystem::path build_school_db(const std::filesystem::path& db_root) {
  std::filesystem::path dir = db_root / "school";
  std::filesystem::create_directories(dir);
  std::filesystem::path path = dir / "school.sqlite";
  std::filesystem::remove(path);
  sqlite3* db = nullptr;
  if (sqlite3_open(path.string().c_str(), &db) != SQLITE_OK) {
    throw std::runtime_error("cannot create " + path.string());
  }
  exec_all(db, {
      "CREATE TABLE student (id INTEGER PRIMARY KEY, name TEXT, gpa REAL, dept TEXT);",
      "CREATE TABLE course (id INTEGER PRIMARY KEY, title TEXT, credits INTEGER);",
      "CREATE TABLE enrollment (student_id INTEGER REFERENCES student(id), "
      "course_id INTEGER REFERENCES course(id), grade TEXT);",
      "INSERT INTO student VALUES (1, 'Ida', 3.9, 'CS');",
      "INSERT INTO student VALUES (2, 'Jon', 2.7, 'Math');",
      "INSERT INTO student VALUES (3, 'Kai', 3.2, 'CS');",
      "INSERT INTO student VALUES (4, 'Lea', 3.6, 'Physics');",
      "INSERT INTO student VALUES (5, 'Moe', 2.9, 'Math');",
      "INSERT INTO student VALUES (6, 'Nia', 3.4, 'CS');",
      "INSERT INTO course VALUES (1, 'Databases', 6);",
      "INSERT INTO course VALUES (2, 'Algebra', 5);",
      "INSERT INTO course VALUES (3, 'Optics', 4);",
      "INSERT INTO enrollment VALUES (1, 1, 'A');",
      "INSERT INTO enrollment VALUES (1, 2, 'B');",
      "INSERT INTO enrollment VALUES (2, 2, 'A');",
      "INSERT INTO enrollment VALUES (3, 1, 'C');",
      "INSERT INTO enrollment VALUES (4, 3, 'A');",
      "INSERT INTO enrollment VALUES (5, 2, 'B');",
      "INSERT INTO enrollment VALUES (6, 1, 'A');",
      "INSERT INTO enrollment VALUES (3, 2, 'A');",
  });
  sqlite3_close(db);
  return path;
}

}  // namespace testsupport
