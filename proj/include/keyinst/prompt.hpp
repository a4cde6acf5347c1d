#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "keyinst/error.hpp"
#include "keyinst/keyinst.hpp"
#include "keyinst/schema.hpp"

namespace keyinst {

enum class Role { System, User };

struct PromptSegment {
  Role role = Role::User;
  std::string content;

  bool operator==(const PromptSegment&) const = default;
};

/// An ordered list of chat segments. Rendering joins segment contents with
/// a blank line and is byte-deterministic.
struct Prompt {
  std::vector<PromptSegment> segments;

  std::string render() const {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (i > 0) out += "\n\n";
      out += segments[i].content;
    }
    return out;
  }

  bool operator==(const Prompt&) const = default;
};

inline constexpr std::string_view kAnalysisInstruction =
    "Please analyse the following natural language query.";

/// The seven worked question-analysis demonstrations shipped with the
/// library. The copy under resources/ is the versioned original; a test
/// keeps the two in sync.
inline constexpr std::string_view kAnalysisDemonstrations =
    "Please analyse the following natural language query.\n"
    "Natural language query: Please show the different statuses of cities and the average "
    "population of cities with each status.\n"
    "Analysis: The question is asking for a list of different statuses of cities and the "
    "average population for cities within each status. This requires grouping the cities by "
    "their status and calculating the average population for each group.\n"
    "\n"
    "Please analyse the following natural language query.\n"
    "Natural language query: What is the average longitude of stations that never had bike "
    "availability more than 10?\n"
    "Analysis: The question is looking to calculate the average longitude of bike stations "
    "where the number of available bikes never exceeded 10. This requires filtering out "
    "stations based on a condition applied to their bike availability data.\n"
    "\n"
    "Please analyse the following natural language query.\n"
    "Natural language query: List the writers of the books in ascending alphabetical order.\n"
    "Analysis: The question is asking to retrieve a list of writers from the book table and "
    "sort them in ascending alphabetical order. This requires selecting the Writer column and "
    "ordering the results.\n"
    "\n"
    "Please analyse the following natural language query.\n"
    "Natural language query: List the publisher of the publication with the highest price.\n"
    "Analysis: The question is asking to identify the publisher of the publication that has "
    "the highest price. This requires sorting the publications by price in descending order "
    "and selecting the top result.\n"
    "\n"
    "Please analyse the following natural language query.\n"
    "Natural language query: Show ids for all employees who don't have a certificate.\n"
    "Analysis: The question is asking for the IDs of employees who do not possess any "
    "certificates. This requires comparing two sets of data: one from the Employee table and "
    "one from the Certificate table, and then finding the difference between these two sets.\n"
    "\n"
    "Please analyse the following natural language query.\n"
    "Natural language query: Show names for all employees who have certificates on both "
    "Boeing 737-800 and Airbus A340-300.\n"
    "Analysis: The question is looking for the names of employees who hold certificates for "
    "both the Boeing 737-800 and the Airbus A340-300 aircraft. This requires identifying "
    "employees who have certificates for both aircraft types and then retrieving their names.\n"
    "\n"
    "Please analyse the following natural language query.\n"
    "Natural language query: Find courses that ran in Fall 2009 or in Spring 2010.\n"
    "Analysis: The question is looking for courses that were offered either in the Fall "
    "semester of 2009 or in the Spring semester of 2010. This requires filtering records "
    "based on specific conditions for both the semester and the year.";

/// Few-shot question-analysis prompt: the seven demonstrations, then the
/// instruction block for the new question ending in a bare "Analysis:" cue.
inline Prompt build_analysis_prompt(const std::string& question) {
  if (detail::trim(question).empty()) throw FormatError("question is empty");
  std::string content = std::string(kAnalysisDemonstrations);
  content += "\n\n";
  content += kAnalysisInstruction;
  content += "\nNatural language query: " + question;
  content += "\nAnalysis:";
  return Prompt{{PromptSegment{Role::User, std::move(content)}}};
}

/// Few-shot KeyInst prompt: one block per demonstration (schema, question,
/// rendered KeyInst), then the task block ending in the analysis cue so the
/// model completes a fresh KeyInst. Demo gold SQL never appears.
inline Prompt build_keyinst_icl_prompt(const TaskInstance& task,
                                       const std::vector<KeyInstRecord>& demos) {
  if (demos.empty()) throw EmptyDemos();
  Prompt prompt;
  for (const auto& demo : demos) {
    std::string block = render_schema_prompt(demo.schema);
    block += "\nQuestion: " + demo.question;
    block += "\n" + render_keyinst(demo.keyinst);
    prompt.segments.push_back(PromptSegment{Role::User, std::move(block)});
  }
  std::string task_block = render_schema_prompt(task.schema);
  task_block += "\nQuestion: " + task.question;
  task_block += "\n" + std::string(kAnalysisMarker);
  prompt.segments.push_back(PromptSegment{Role::User, std::move(task_block)});
  return prompt;
}

inline constexpr std::string_view kSqlAnswerCue = "Answer with a single SQL query only.";

/// Zero-shot SQL prompt: schema, question, the KeyInst block when present,
/// then the answer cue.
inline Prompt build_zero_shot_sql_prompt(const DatabaseSchema& schema, const std::string& question,
                                         const std::optional<KeyInst>& keyinst = std::nullopt) {
  Prompt prompt;
  std::string head = render_schema_prompt(schema);
  head += "\nQuestion: " + question;
  prompt.segments.push_back(PromptSegment{Role::User, std::move(head)});
  if (keyinst.has_value()) {
    prompt.segments.push_back(PromptSegment{Role::User, render_keyinst(*keyinst)});
  }
  prompt.segments.push_back(PromptSegment{Role::User, std::string(kSqlAnswerCue)});
  return prompt;
}

/// Appends the rendered KeyInst as a new final user segment, leaving the
/// base segments untouched. Warns when the base already carries one.
inline Prompt append_keyinst(const Prompt& base_prompt, const KeyInst& keyinst,
                             std::ostream* warnings = nullptr) {
  if (warnings != nullptr) {
    for (const auto& segment : base_prompt.segments) {
      if (segment.content.find(kSuggestionMarker) != std::string::npos) {
        *warnings << "warning: prompt already contains a KeyInst segment\n";
        break;
      }
    }
  }
  Prompt out = base_prompt;
  out.segments.push_back(PromptSegment{Role::User, render_keyinst(keyinst)});
  return out;
}

}  // namespace keyinst
