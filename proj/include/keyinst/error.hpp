#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace keyinst {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed SQL. Carries the byte offset of the offending token and a
/// hint describing what the parser expected there.
class ParseError : public Error {
public:
  ParseError(const std::string& message, std::size_t offset, std::string expected)
      : Error(message + " at byte " + std::to_string(offset) +
              (expected.empty() ? "" : " (expected " + expected + ")")),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

private:
  std::size_t offset_;
  std::string expected_;
};

/// Structurally invalid data file or schema value.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error(what) {}
  FormatError(const std::string& what, std::size_t record_index)
      : Error(what + " (record " + std::to_string(record_index) + ")"),
        record_index_(static_cast<long>(record_index)) {}

  long record_index() const { return record_index_; }

private:
  long record_index_ = -1;
};

/// Dataset rows referencing database ids absent from the schema file.
class MissingDatabase : public Error {
public:
  explicit MissingDatabase(std::vector<std::string> db_ids)
      : Error("unresolved db_ids: " + join(db_ids)), db_ids_(std::move(db_ids)) {}

  const std::vector<std::string>& db_ids() const { return db_ids_; }

private:
  static std::string join(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
      if (!out.empty()) out += ", ";
      out += id;
    }
    return out;
  }
  std::vector<std::string> db_ids_;
};

/// SQL references a table or column that does not exist in the schema.
class UnknownReference : public Error {
public:
  explicit UnknownReference(const std::string& name)
      : Error("unknown reference: " + name), name_(name) {}

  const std::string& name() const { return name_; }

private:
  std::string name_;
};

/// Overlapping rewrite spans.
class OverlapError : public Error {
public:
  explicit OverlapError(const std::string& what) : Error(what) {}
};

class KeyInstError : public Error {
public:
  explicit KeyInstError(const std::string& what) : Error(what) {}
};

/// Model output that cannot be read back as a KeyInst.
class KeyInstParseError : public Error {
public:
  explicit KeyInstParseError(const std::string& what) : Error(what) {}
};

/// Provider returned blank analysis text.
class AnalysisEmpty : public Error {
public:
  explicit AnalysisEmpty(const std::string& what) : Error(what) {}
};

class EmptyDemos : public Error {
public:
  EmptyDemos() : Error("demonstration list is empty") {}
};

/// Transport-level provider failures.
class ProviderError : public Error {
public:
  explicit ProviderError(const std::string& what) : Error(what) {}
};

class AuthError : public ProviderError {
public:
  explicit AuthError(const std::string& what) : ProviderError(what) {}
};

class RateLimited : public ProviderError {
public:
  explicit RateLimited(const std::string& what) : ProviderError(what) {}
};

class TransportError : public ProviderError {
public:
  explicit TransportError(const std::string& what) : ProviderError(what) {}
};

class BadResponse : public ProviderError {
public:
  explicit BadResponse(const std::string& what) : ProviderError(what) {}
};

class ScriptExhausted : public ProviderError {
public:
  explicit ScriptExhausted(const std::string& what) : ProviderError(what) {}
};

/// SQL execution failure against a fixture database.
class ExecError : public Error {
public:
  explicit ExecError(const std::string& what) : Error(what) {}
};

class ExecTimeout : public Error {
public:
  explicit ExecTimeout(const std::string& what) : Error(what) {}
};

class LengthMismatch : public Error {
public:
  LengthMismatch(std::size_t tasks, std::size_t predictions)
      : Error("task/prediction count mismatch: " + std::to_string(tasks) + " vs " +
              std::to_string(predictions)) {}
};

class NoSqlFound : public Error {
public:
  explicit NoSqlFound(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace keyinst
