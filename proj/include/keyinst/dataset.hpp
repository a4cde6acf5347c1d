#pragma once

#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyinst/error.hpp"
#include "keyinst/keyinst.hpp"
#include "keyinst/llm.hpp"
#include "keyinst/prompt.hpp"
#include "keyinst/schema.hpp"

namespace keyinst {

/// Builds one KeyInst-set record: the suggestion comes deterministically
/// from the gold query, the analysis from the provider answering the
/// question-analysis prompt (any "Analysis:" echo stripped).
inline KeyInstRecord build_keyinst_record(const DatabaseSchema& schema, const std::string& question,
                                          const std::string& gold_sql, Provider& analysis_provider) {
  sql::KeywordSuggestion suggestion = sql::make_keyword_suggestion(gold_sql);

  Prompt prompt = build_analysis_prompt(question);
  std::string analysis;
  try {
    analysis = analysis_provider.generate(prompt);
  } catch (const ProviderError& e) {
    throw ProviderError(std::string(e.what()) + " (question: " + question + ")");
  }
  analysis = detail::trim(analysis);
  std::string lower = detail::lower_copy(analysis);
  if (lower.rfind("analysis:", 0) == 0) {
    analysis = detail::trim(analysis.substr(std::string_view("analysis:").size()));
  }
  if (analysis.empty()) throw AnalysisEmpty("blank analysis for question: " + question);

  KeyInst keyinst = make_keyinst(std::move(analysis), std::move(suggestion));
  return KeyInstRecord{schema, question, std::move(keyinst), gold_sql};
}

inline nlohmann::json keyinst_record_to_json(const KeyInstRecord& record) {
  nlohmann::json line;
  line["db_id"] = record.schema.db_id;
  line["question"] = record.question;
  line["analysis"] = record.keyinst.question_analysis;
  nlohmann::json keywords = nlohmann::json::array();
  for (sql::SqlKeyword k : record.keyinst.keyword_suggestion.keywords) {
    keywords.push_back(std::string(sql::name_of(k)));
  }
  line["keywords"] = std::move(keywords);
  line["gold_sql"] = record.gold_sql;
  return line;
}

/// Reads a KeyInst set from JSON Lines. Suggestions are recomputed from the
/// stored gold SQL rather than trusted from the file.
inline std::vector<KeyInstRecord> load_keyinst_records(
    const std::filesystem::path& path, const std::map<std::string, DatabaseSchema>& schemas) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<KeyInstRecord> records;
  std::vector<std::string> missing;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) {
      ++index;
      continue;
    }
    try {
      nlohmann::json entry = nlohmann::json::parse(line);
      std::string db_id = entry.at("db_id").get<std::string>();
      auto found = schemas.find(db_id);
      if (found == schemas.end()) {
        missing.push_back(db_id);
        ++index;
        continue;
      }
      records.push_back(make_keyinst_record(found->second,
                                            entry.at("question").get<std::string>(),
                                            entry.at("analysis").get<std::string>(),
                                            entry.at("gold_sql").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad KeyInst record: ") + e.what(), index);
    }
    ++index;
  }
  if (!missing.empty()) throw MissingDatabase(std::move(missing));
  return records;
}

struct KeyInstBuildInput {
  DatabaseSchema schema;
  std::string question;
  std::string gold_sql;
};

struct DatasetBuildOptions {
  std::filesystem::path output_path;
  std::filesystem::path checkpoint_path;
  int concurrency = 4;
};

namespace detail {

inline long read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return -1;
  nlohmann::json doc;
  try {
    in >> doc;
    return doc.at("last_completed_index").get<long>();
  } catch (const nlohmann::json::exception&) {
    return -1;
  }
}

inline void write_checkpoint(const std::filesystem::path& path, long index) {
  std::ofstream out(path, std::ios::trunc);
  out << nlohmann::json{{"last_completed_index", index}}.dump() << '\n';
}

}  // namespace detail

/// Builds records for every input, appending JSON Lines in input order.
/// The checkpoint file tracks the last index whose record has been written,
/// so an interrupted build resumes where it stopped. Provider calls run on
/// up to `concurrency` workers; the writer keeps output order equal to
/// input order.
inline std::size_t build_keyinst_dataset(const std::vector<KeyInstBuildInput>& inputs,
                                         Provider& analysis_provider,
                                         const DatasetBuildOptions& options) {
  long checkpoint = detail::read_checkpoint(options.checkpoint_path);
  std::size_t first_pending = static_cast<std::size_t>(checkpoint + 1);
  if (first_pending >= inputs.size()) return 0;

  std::mutex mutex;
  std::condition_variable ready;
  std::map<std::size_t, KeyInstRecord> completed;
  std::map<std::size_t, std::exception_ptr> failed;
  std::size_t next_to_claim = first_pending;
  bool abort = false;

  auto worker = [&] {
    while (true) {
      std::size_t index;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (abort || next_to_claim >= inputs.size()) return;
        index = next_to_claim++;
      }
      try {
        KeyInstRecord record = build_keyinst_record(inputs[index].schema, inputs[index].question,
                                                    inputs[index].gold_sql, analysis_provider);
        std::lock_guard<std::mutex> lock(mutex);
        completed.emplace(index, std::move(record));
        ready.notify_all();
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        failed.emplace(index, std::current_exception());
        abort = true;
        ready.notify_all();
      }
    }
  };

  int thread_count = std::max(1, options.concurrency);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);

  std::ofstream out(options.output_path, std::ios::app);
  if (!out) {
    {
      std::lock_guard<std::mutex> lock(mutex);
      abort = true;
    }
    ready.notify_all();
    for (auto& t : threads) t.join();
    throw FormatError("cannot open " + options.output_path.string());
  }

  std::size_t written = 0;
  std::exception_ptr failure;
  for (std::size_t index = first_pending; index < inputs.size(); ++index) {
    std::unique_lock<std::mutex> lock(mutex);
    ready.wait(lock, [&] { return completed.count(index) || failed.count(index); });
    if (failed.count(index)) {
      failure = failed[index];
      abort = true;
      break;
    }
    KeyInstRecord record = std::move(completed.at(index));
    completed.erase(index);
    lock.unlock();

    out << keyinst_record_to_json(record).dump() << '\n';
    out.flush();
    detail::write_checkpoint(options.checkpoint_path, static_cast<long>(index));
    ++written;
  }

  {
    std::lock_guard<std::mutex> lock(mutex);
    abort = true;
  }
  ready.notify_all();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return written;
}

}  // namespace keyinst
