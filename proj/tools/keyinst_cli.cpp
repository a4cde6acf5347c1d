// keyinst command-line front end: dataset building, retrieval, prompt
// rendering, batch generation and execution-accuracy evaluation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyinst/config.hpp"
#include "keyinst/dataset.hpp"
#include "keyinst/eval.hpp"
#include "keyinst/pipeline.hpp"
#include "keyinst/prompt.hpp"
#include "keyinst/retrieval.hpp"
#include "keyinst/schema.hpp"
#include "keyinst/sql/analysis.hpp"

namespace {

using namespace keyinst;

struct TaskRow {
  std::string db_id;
  std::string question;
  std::optional<std::string> gold_sql;
  std::optional<sql::StructuralType> type_tag;
};

std::vector<TaskRow> load_task_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<TaskRow> rows;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) {
      ++index;
      continue;
    }
    try {
      nlohmann::json entry = nlohmann::json::parse(line);
      TaskRow row;
      row.db_id = entry.at("db_id").get<std::string>();
      row.question = entry.at("question").get<std::string>();
      if (entry.contains("gold_sql") && !entry.at("gold_sql").is_null()) {
        row.gold_sql = entry.at("gold_sql").get<std::string>();
      }
      if (entry.contains("type_tag") && !entry.at("type_tag").is_null()) {
        row.type_tag = sql::structural_type_from_name(entry.at("type_tag").get<std::string>());
      }
      rows.push_back(std::move(row));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad task line: ") + e.what(), index);
    }
    ++index;
  }
  return rows;
}

std::filesystem::path db_path_for(const std::filesystem::path& db_root, const std::string& db_id) {
  return db_root / db_id / (db_id + ".sqlite");
}

/// Schemas come from the tables file when given, else from the fixtures.
std::vector<TaskInstance> resolve_tasks(const std::vector<TaskRow>& rows,
                                        const std::filesystem::path& db_root,
                                        const std::string& tables_file) {
  std::map<std::string, DatabaseSchema> schemas;
  if (!tables_file.empty()) schemas = load_spider_tables(tables_file);

  std::vector<TaskInstance> tasks;
  std::vector<std::string> missing;
  for (const auto& row : rows) {
    auto found = schemas.find(row.db_id);
    if (found == schemas.end()) {
      std::filesystem::path db = db_path_for(db_root, row.db_id);
      if (!std::filesystem::exists(db)) {
        missing.push_back(row.db_id);
        continue;
      }
      schemas[row.db_id] = schema_from_sqlite(db);
      found = schemas.find(row.db_id);
    }
    TaskInstance task;
    task.schema = found->second;
    task.question = row.question;
    task.gold_sql = row.gold_sql;
    task.db_path = db_path_for(db_root, row.db_id);
    task.type_tag = row.type_tag;
    tasks.push_back(std::move(task));
  }
  if (!missing.empty()) throw MissingDatabase(missing);
  return tasks;
}

int run_analysis_filter(const std::string&) {
  std::string line;
  bool any_error = false;
  while (std::getline(std::cin, line)) {
    if (detail::trim(line).empty()) continue;
    nlohmann::json out;
    out["sql"] = line;
    try {
      sql::Node tree = sql::parse_sql(line);
      nlohmann::json keywords = nlohmann::json::array();
      for (auto k : sql::extract_keywords(tree)) keywords.push_back(std::string(sql::name_of(k)));
      nlohmann::json suggestion = nlohmann::json::array();
      for (auto k : sql::make_keyword_suggestion(tree).keywords) {
        suggestion.push_back(std::string(sql::name_of(k)));
      }
      out["keywords"] = std::move(keywords);
      out["suggestion"] = std::move(suggestion);
      out["skeleton"] = sql::extract_skeleton(tree).text;
      out["type"] = std::string(sql::name_of(sql::classify_structural_type(tree)));
    } catch (const ParseError& e) {
      out["error"] = e.what();
      any_error = true;
    }
    std::cout << out.dump() << "\n";
  }
  return any_error ? 2 : 0;
}

std::map<std::string, std::string> merged_config(const std::string& config_file) {
  std::map<std::string, std::string> values;
  if (!config_file.empty()) values = parse_flat_config(config_file);
  return values;
}

TaskRow load_task_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    TaskRow row;
    row.db_id = doc.at("db_id").get<std::string>();
    row.question = doc.at("question").get<std::string>();
    if (doc.contains("gold_sql") && !doc.at("gold_sql").is_null()) {
      row.gold_sql = doc.at("gold_sql").get<std::string>();
    }
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KeyInst Text-to-SQL toolkit"};
  app.require_subcommand(1);

  std::string config_file;
  std::string db_root = ".";
  long seed = 0;  // reserved; generation runs greedy at temperature 0
  app.add_option("--config", config_file, "key = value configuration file");
  app.add_option("--db-root", db_root, "directory holding <db_id>/<db_id>.sqlite fixtures");
  app.add_option("--seed", seed, "reserved for sampling decoders");

  // --- line filters over stdin ---
  app.add_subcommand("extract-keywords", "read SQL per line, emit keyword analysis JSON");
  app.add_subcommand("skeleton", "read SQL per line, emit skeleton JSON");
  app.add_subcommand("classify", "read SQL per line, emit structural type JSON");

  // --- simplify ---
  auto* simplify = app.add_subcommand("simplify", "classify examples and emit task JSONL");
  std::string tables_file, examples_file, out_file;
  simplify->add_option("--tables", tables_file, "Spider tables.json")->required();
  simplify->add_option("--examples", examples_file, "Spider examples JSON array")->required();
  simplify->add_option("--out", out_file, "output JSONL path (default stdout)");

  // --- build-dataset ---
  auto* build = app.add_subcommand("build-dataset", "build the KeyInst set from gold examples");
  std::string bd_tables, bd_examples, bd_out, bd_checkpoint, bd_canned;
  int bd_concurrency = 4;
  build->add_option("--tables", bd_tables, "Spider tables.json")->required();
  build->add_option("--examples", bd_examples, "Spider examples JSON array")->required();
  build->add_option("--out", bd_out, "KeyInst JSONL output")->required();
  build->add_option("--checkpoint", bd_checkpoint, "checkpoint file (default <out>.checkpoint)");
  build->add_option("--concurrency", bd_concurrency, "concurrent provider calls");
  build->add_option("--canned-analysis", bd_canned,
                    "use this fixed analysis text instead of calling the provider");

  // --- retrieve ---
  auto* retrieve = app.add_subcommand("retrieve", "select demonstration records for a task");
  std::string rt_pool, rt_task, rt_tables;
  int rt_m = 6;
  retrieve->add_option("--m", rt_m, "demonstration count");
  retrieve->add_option("--pool", rt_pool, "KeyInst JSONL pool")->required();
  retrieve->add_option("--task", rt_task, "task JSON file {db_id, question}")->required();
  retrieve->add_option("--tables", rt_tables, "Spider tables.json")->required();

  // --- prompt ---
  auto* prompt_cmd = app.add_subcommand("prompt", "render one of the prompt templates");
  std::string pr_mode, pr_question, pr_task, pr_tables, pr_pool, pr_keyinst_text;
  bool pr_simplify = false;
  int pr_m = 6;
  prompt_cmd->add_option("--mode", pr_mode, "analysis | keyinst-icl | sql-zero")->required();
  prompt_cmd->add_option("--question", pr_question, "question text (analysis mode)");
  prompt_cmd->add_option("--task", pr_task, "task JSON file {db_id, question}");
  prompt_cmd->add_option("--tables", pr_tables, "Spider tables.json");
  prompt_cmd->add_option("--pool", pr_pool, "KeyInst JSONL pool (keyinst-icl mode)");
  prompt_cmd->add_option("--m", pr_m, "demonstration count (keyinst-icl mode)");
  prompt_cmd->add_option("--keyinst", pr_keyinst_text,
                         "rendered KeyInst text to include (sql-zero mode)");
  prompt_cmd->add_flag("--simplify", pr_simplify,
                       "filter the schema by the task's gold SQL (sql-zero mode)");

  // --- generate ---
  auto* generate = app.add_subcommand("generate", "run the batch pipeline over a task file");
  std::string gn_tasks, gn_tables, gn_out, gn_run_log, gn_provider = "http";
  generate->add_option("--tasks", gn_tasks, "task JSONL {db_id, question, gold_sql, type_tag}")
      ->required();
  generate->add_option("--tables", gn_tables, "Spider tables.json (else schemas come from fixtures)");
  generate->add_option("--out", gn_out, "predictions JSONL (overrides config)");
  generate->add_option("--run-log", gn_run_log, "run log JSONL (overrides config)");
  generate->add_option("--provider", gn_provider, "http | echo-gold (echo replays gold SQL)");

  // --- evaluate ---
  auto* evaluate = app.add_subcommand("evaluate", "score predictions with execution accuracy");
  std::string ev_tasks, ev_preds, ev_tables;
  bool ev_strict = false;
  int ev_workers = 4;
  evaluate->add_option("--tasks", ev_tasks, "task JSONL with gold_sql")->required();
  evaluate->add_option("--preds", ev_preds, "predictions JSONL {task_id, sql}")->required();
  evaluate->add_option("--tables", ev_tables, "Spider tables.json (optional)");
  evaluate->add_flag("--strict", ev_strict, "count gold execution failures in denominators");
  evaluate->add_option("--workers", ev_workers, "parallel evaluation workers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("extract-keywords") || app.got_subcommand("skeleton") ||
        app.got_subcommand("classify")) {
      return run_analysis_filter("");
    }

    if (app.got_subcommand(simplify)) {
      auto tasks = load_spider_dataset(tables_file, examples_file, db_root);
      std::ofstream file;
      if (!out_file.empty()) {
        file.open(out_file, std::ios::trunc);
        if (!file) throw FormatError("cannot open " + out_file);
      }
      std::ostream& out = out_file.empty() ? std::cout : file;
      for (const auto& task : tasks) {
        nlohmann::json line;
        line["db_id"] = task.schema.db_id;
        line["question"] = task.question;
        line["gold_sql"] = *task.gold_sql;
        line["type_tag"] =
            std::string(sql::name_of(sql::classify_structural_type(*task.gold_sql)));
        out << line.dump() << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(build)) {
      auto dataset_tasks = load_spider_dataset(bd_tables, bd_examples, db_root);
      std::vector<KeyInstBuildInput> inputs;
      for (const auto& task : dataset_tasks) {
        inputs.push_back(KeyInstBuildInput{task.schema, task.question, *task.gold_sql});
      }
      DatasetBuildOptions options;
      options.output_path = bd_out;
      options.checkpoint_path =
          bd_checkpoint.empty() ? std::filesystem::path(bd_out + ".checkpoint") : bd_checkpoint;
      options.concurrency = bd_concurrency;

      std::shared_ptr<Provider> provider;
      if (!bd_canned.empty()) {
        provider = std::make_shared<CallbackProvider>(
            [text = bd_canned](const Prompt&) { return text; });
      } else {
        provider = std::make_shared<HttpProvider>(
            generation_config_from(merged_config(config_file), "generator."));
      }
      std::size_t written = build_keyinst_dataset(inputs, *provider, options);
      std::cerr << "wrote " << written << " records to " << bd_out << "\n";
      return 0;
    }

    if (app.got_subcommand(retrieve)) {
      auto schemas = load_spider_tables(rt_tables);
      auto pool = load_keyinst_records(rt_pool, schemas);
      TaskRow row = load_task_file(rt_task);
      auto found = schemas.find(row.db_id);
      if (found == schemas.end()) throw MissingDatabase({row.db_id});
      TaskInstance task;
      task.schema = found->second;
      task.question = row.question;
      auto scored = score_pool(task, pool);
      nlohmann::json selected = nlohmann::json::array();
      for (std::size_t i = 0; i < scored.size() && i < static_cast<std::size_t>(rt_m); ++i) {
        selected.push_back({{"index", scored[i].index}, {"score", scored[i].score}});
      }
      std::cout << nlohmann::json{{"selected", std::move(selected)}}.dump() << "\n";
      return 0;
    }

    if (app.got_subcommand(prompt_cmd)) {
      if (pr_mode == "analysis") {
        if (pr_question.empty() && !pr_task.empty()) pr_question = load_task_file(pr_task).question;
        std::cout << build_analysis_prompt(pr_question).render() << "\n";
        return 0;
      }
      if (pr_mode == "keyinst-icl" || pr_mode == "sql-zero") {
        if (pr_task.empty() || pr_tables.empty()) {
          throw ConfigError("--task and --tables are required for mode " + pr_mode);
        }
        auto schemas = load_spider_tables(pr_tables);
        TaskRow row = load_task_file(pr_task);
        auto found = schemas.find(row.db_id);
        if (found == schemas.end()) throw MissingDatabase({row.db_id});
        TaskInstance task;
        task.schema = found->second;
        task.question = row.question;
        task.gold_sql = row.gold_sql;

        if (pr_mode == "keyinst-icl") {
          if (pr_pool.empty()) throw ConfigError("--pool is required for keyinst-icl");
          auto pool = load_keyinst_records(pr_pool, schemas);
          auto demos = select_demonstrations(task, pool, static_cast<std::size_t>(pr_m));
          std::cout << build_keyinst_icl_prompt(task, demos).render() << "\n";
          return 0;
        }
        DatabaseSchema schema = task.schema;
        if (pr_simplify) {
          if (!task.gold_sql.has_value()) {
            throw ConfigError("--simplify needs gold_sql in the task file");
          }
          schema = filter_schema_by_sql(schema, *task.gold_sql);
        }
        std::optional<KeyInst> keyinst;
        if (!pr_keyinst_text.empty()) keyinst = parse_keyinst(pr_keyinst_text);
        std::cout << build_zero_shot_sql_prompt(schema, task.question, keyinst).render() << "\n";
        return 0;
      }
      throw ConfigError("unknown prompt mode: " + pr_mode);
    }

    if (app.got_subcommand(generate)) {
      auto rows = load_task_rows(gn_tasks);
      auto tasks = resolve_tasks(rows, db_root, gn_tables);

      auto values = merged_config(config_file);
      PipelineConfig config = pipeline_config_from(values);
      if (!gn_out.empty()) config.output_path = gn_out;
      if (!gn_run_log.empty()) config.run_log_path = gn_run_log;

      PipelineProviders providers;
      if (gn_provider == "echo-gold") {
        auto by_question = std::make_shared<std::map<std::string, std::string>>();
        for (const auto& task : tasks) {
          if (task.gold_sql.has_value()) (*by_question)["Question: " + task.question] = *task.gold_sql;
        }
        auto echo = std::make_shared<CallbackProvider>([by_question](const Prompt& p) {
          std::string rendered = p.render();
          for (const auto& [needle, gold] : *by_question) {
            if (rendered.find(needle) != std::string::npos) return gold;
          }
          throw BadResponse("no gold SQL matches the prompt");
        });
        providers.generator = echo;
        providers.sql = echo;
      } else if (gn_provider == "http") {
        providers.generator = std::make_shared<HttpProvider>(config.generator_config);
        providers.sql = std::make_shared<HttpProvider>(config.sql_config);
      } else {
        throw ConfigError("unknown provider: " + gn_provider);
      }

      std::map<std::string, DatabaseSchema> schemas;
      for (const auto& task : tasks) schemas[task.schema.db_id] = task.schema;
      PipelineContext ctx = make_pipeline_context(config, providers, schemas);
      BatchResult batch = run_batch(tasks, ctx);
      if (batch.report.has_value()) {
        std::cout << eval_report_to_json(*batch.report).dump(2) << "\n";
      } else {
        std::cout << nlohmann::json{{"tasks", tasks.size()},
                                    {"attempted", batch.attempted},
                                    {"failed", batch.failed}}
                         .dump()
                  << "\n";
      }
      return batch.failed > 0 ? 3 : 0;
    }

    if (app.got_subcommand(evaluate)) {
      auto rows = load_task_rows(ev_tasks);
      auto tasks = resolve_tasks(rows, db_root, ev_tables);

      std::ifstream preds_in(ev_preds);
      if (!preds_in) throw FormatError("cannot open " + ev_preds);
      std::map<std::size_t, std::string> by_id;
      std::string line;
      std::size_t index = 0;
      while (std::getline(preds_in, line)) {
        if (detail::trim(line).empty()) {
          ++index;
          continue;
        }
        try {
          nlohmann::json entry = nlohmann::json::parse(line);
          by_id[entry.at("task_id").get<std::size_t>()] = entry.at("sql").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
          throw FormatError(std::string("bad prediction line: ") + e.what(), index);
        }
        ++index;
      }
      std::vector<std::string> predictions;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto found = by_id.find(i);
        predictions.push_back(found != by_id.end() ? found->second : "");
      }

      EvalOptions options;
      options.strict = ev_strict;
      options.workers = ev_workers;
      EvalReport report = evaluate_dataset(tasks, predictions, options);
      std::cout << eval_report_to_json(report).dump(2) << "\n";
      return 0;
    }
  } catch (const ProviderError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
