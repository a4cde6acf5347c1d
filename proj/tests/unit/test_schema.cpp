#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "keyinst/schema.hpp"
#include "keyinst/sql/parser.hpp"
#include "support/fixtures.hpp"

using namespace keyinst;

namespace {
const std::filesystem::path kDataDir = KEYINST_TEST_DATA_DIR;
}

TEST_CASE("validate_schema enforces the structural invariants") {
  DatabaseSchema schema = testsupport::shop_emp_schema();
  CHECK_NOTHROW(validate_schema(schema));

  DatabaseSchema empty;
  empty.db_id = "empty";
  CHECK_THROWS_AS(validate_schema(empty), FormatError);

  DatabaseSchema dupes = schema;
  dupes.tables.push_back(dupes.tables[0]);
  CHECK_THROWS_AS(validate_schema(dupes), FormatError);

  DatabaseSchema bad_pk = schema;
  bad_pk.primary_keys.push_back({"shop", "nosuch"});
  CHECK_THROWS_AS(validate_schema(bad_pk), FormatError);
}

TEST_CASE("render_schema_prompt emits CREATE TABLE blocks") {
  DatabaseSchema schema;
  schema.db_id = "one";
  schema.tables = {{"shop", {{"name", "TEXT"}, {"id", "INTEGER"}}}};
  CHECK(render_schema_prompt(schema) == "CREATE TABLE shop (name TEXT, id INTEGER);");
}

TEST_CASE("render_schema_prompt lists foreign keys as comment lines") {
  DatabaseSchema schema;
  schema.db_id = "two";
  schema.tables = {
      {"shop", {{"name", "TEXT"}, {"id", "INTEGER"}}},
      {"device", {{"id", "INTEGER"}, {"shop_id", "INTEGER"}}},
  };
  schema.foreign_keys = {{{"shop", "id"}, {"device", "shop_id"}}};
  CHECK(render_schema_prompt(schema) ==
        "CREATE TABLE shop (name TEXT, id INTEGER);\n"
        "CREATE TABLE device (id INTEGER, shop_id INTEGER);\n"
        "-- shop.id = device.shop_id");

  // distinct schemas render distinct text, identical ones identical bytes
  CHECK(render_schema_prompt(schema) == render_schema_prompt(schema));
  CHECK(render_schema_prompt(schema) != render_schema_prompt(testsupport::shop_emp_schema()));
}

TEST_CASE("filter_schema_by_sql keeps referenced tables plus primary keys") {
  DatabaseSchema schema = testsupport::shop_emp_schema();
  DatabaseSchema filtered = filter_schema_by_sql(schema, "SELECT name FROM shop");
  REQUIRE(filtered.tables.size() == 1);
  CHECK(filtered.tables[0].name == "shop");
  REQUIRE(filtered.tables[0].columns.size() == 2);
  CHECK(filtered.tables[0].columns[0].name == "name");
  CHECK(filtered.tables[0].columns[1].name == "id");
  REQUIRE(filtered.primary_keys.size() == 1);
  CHECK(filtered.primary_keys[0] == TableColumn{"shop", "id"});
}

TEST_CASE("filter_schema_by_sql with full references keeps the schema") {
  DatabaseSchema schema = testsupport::shop_emp_schema();
  DatabaseSchema filtered = filter_schema_by_sql(
      schema, "SELECT shop.name, shop.id, shop.addr, emp.id, emp.age FROM shop, emp");
  CHECK(filtered == schema);
}

TEST_CASE("filter_schema_by_sql is idempotent") {
  DatabaseSchema schema = testsupport::retail_schema();
  const std::string sql =
      "SELECT shop.name FROM shop JOIN device ON shop.id = device.shop_id "
      "WHERE device.price > 10";
  DatabaseSchema once = filter_schema_by_sql(schema, sql);
  DatabaseSchema twice = filter_schema_by_sql(once, sql);
  CHECK(once == twice);

  // output is always a sub-schema of the input
  for (const auto& table : once.tables) {
    const SchemaTable* original = nullptr;
    for (const auto& t : schema.tables) {
      if (t.name == table.name) original = &t;
    }
    REQUIRE(original != nullptr);
    for (const auto& column : table.columns) {
      bool found = false;
      for (const auto& c : original->columns) {
        if (c.name == column.name) found = true;
      }
      CHECK(found);
    }
  }
}

TEST_CASE("filter_schema_by_sql resolves aliases, stars and subqueries") {
  DatabaseSchema schema = testsupport::retail_schema();

  DatabaseSchema with_alias = filter_schema_by_sql(
      schema, "SELECT T1.name FROM shop AS T1 JOIN employee AS T2 ON T1.id = T2.shop_id");
  CHECK(with_alias.tables.size() == 2);

  DatabaseSchema with_star = filter_schema_by_sql(schema, "SELECT * FROM supplier");
  REQUIRE(with_star.tables.size() == 1);
  CHECK(with_star.tables[0].columns.size() == 3);

  DatabaseSchema with_sub = filter_schema_by_sql(
      schema, "SELECT name FROM shop WHERE id IN (SELECT shop_id FROM device WHERE price > 50)");
  CHECK(with_sub.tables.size() == 2);
}

TEST_CASE("filter_schema_by_sql reports unknown references") {
  DatabaseSchema schema = testsupport::shop_emp_schema();
  CHECK_THROWS_AS(filter_schema_by_sql(schema, "SELECT nosuch FROM shop"), UnknownReference);
  CHECK_THROWS_AS(filter_schema_by_sql(schema, "SELECT name FROM warehouse"), UnknownReference);
  CHECK_THROWS_AS(filter_schema_by_sql(schema, "SELECT emp.phone FROM emp"), UnknownReference);
}

TEST_CASE("rewrite_question_terms replaces spans right to left") {
  // "name of the shop" -> "shop.name"
  CHECK(rewrite_question_terms("name of the shop", {{0, 16, "shop.name"}}) == "shop.name");

  CHECK(rewrite_question_terms("unchanged question", {}) == "unchanged question");

  //                0123456789012345678901234
  std::string q = "show ages of the workers";
  auto rewritten = rewrite_question_terms(q, {{5, 9, "emp.age"}, {17, 24, "emp"}});
  CHECK(rewritten == "show emp.age of the emp");

  // reconstruction oracle: split/concatenate around the spans
  std::string manual = q.substr(0, 5) + "emp.age" + q.substr(9, 17 - 9) + "emp" + q.substr(24);
  CHECK(rewritten == manual);
}

TEST_CASE("rewrite_question_terms rejects bad spans") {
  CHECK_THROWS_AS(rewrite_question_terms("short", {{0, 99, "x"}}), FormatError);
  CHECK_THROWS_AS(rewrite_question_terms("abcdef", {{0, 4, "x"}, {2, 5, "y"}}), OverlapError);
}

TEST_CASE("load_spider_dataset resolves schemas and database paths") {
  auto tasks = load_spider_dataset(kDataDir / "spider/tables.json",
                                   kDataDir / "spider/examples.json", "/tmp/dbs");
  REQUIRE(tasks.size() == 20);
  CHECK(tasks[0].schema.db_id == "retail");
  CHECK(tasks[0].db_path == std::filesystem::path("/tmp/dbs/retail/retail.sqlite"));
  for (const auto& task : tasks) {
    REQUIRE(task.gold_sql.has_value());
    CHECK_NOTHROW(sql::parse_sql(*task.gold_sql));
  }

  // two tasks sharing one schema object value
  CHECK(tasks[0].schema == tasks[1].schema);
}

TEST_CASE("load_spider_dataset reports unknown db ids") {
  try {
    load_spider_dataset(kDataDir / "spider/tables.json", kDataDir / "spider/bad_examples.json",
                        "/tmp/dbs");
    FAIL("expected MissingDatabase");
  } catch (const MissingDatabase& e) {
    REQUIRE(e.db_ids().size() == 1);
    CHECK(e.db_ids()[0] == "nosuch");
  }
}

TEST_CASE("load_spider_tables validates entries") {
  auto schemas = load_spider_tables(kDataDir / "spider/tables.json");
  REQUIRE(schemas.size() == 2);
  const DatabaseSchema& retail = schemas.at("retail");
  REQUIRE(retail.tables.size() == 3);
  CHECK(retail.tables[0].name == "shop");
  CHECK(retail.tables[0].columns[0].type == "NUMBER");
  REQUIRE(retail.foreign_keys.size() == 2);
  CHECK(retail.foreign_keys[0].referenced == TableColumn{"shop", "id"});
  CHECK(retail.foreign_keys[0].referencing == TableColumn{"device", "shop_id"});
}
