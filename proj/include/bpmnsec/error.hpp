#pragma once

#include <stdexcept>
#include <string>

namespace bpmnsec {

/// Pipeline stage that raised an error. Used by the CLI to pick exit codes.
enum class Stage {
  Config,
  Language,
  Ingest,
  Mapping,
  Enrichment,
  Compile,
  Simulate,
  Report,
};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Config: return "config";
    case Stage::Language: return "language";
    case Stage::Ingest: return "ingest";
    case Stage::Mapping: return "mapping";
    case Stage::Enrichment: return "enrichment";
    case Stage::Compile: return "compile";
    case Stage::Simulate: return "simulate";
    case Stage::Report: return "report";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

struct SourceLoc {
  int line = 0;
  int column = 0;
};

// Locations never take part in AST equality; a reprinted AST must compare
// equal to the original.
inline bool operator==(const SourceLoc&, const SourceLoc&) { return true; }

class LanguageError : public Error {
 public:
  LanguageError(const std::string& origin, SourceLoc loc, const std::string& msg)
      : Error(Stage::Language, format(origin, loc, msg)), origin_(origin), loc_(loc) {}
  explicit LanguageError(const std::string& msg) : Error(Stage::Language, msg) {}

  const std::string& origin() const { return origin_; }
  SourceLoc location() const { return loc_; }

 private:
  static std::string format(const std::string& origin, SourceLoc loc, const std::string& msg) {
    return origin + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg;
  }
  std::string origin_;
  SourceLoc loc_;
};

class IngestError : public Error {
 public:
  explicit IngestError(const std::string& msg) : Error(Stage::Ingest, msg) {}
};

class MappingError : public Error {
 public:
  explicit MappingError(const std::string& msg) : Error(Stage::Mapping, msg) {}
};

class EnrichError : public Error {
 public:
  explicit EnrichError(const std::string& msg) : Error(Stage::Enrichment, msg) {}
};

class GraphError : public Error {
 public:
  GraphError(Stage stage, const std::string& msg) : Error(stage, msg) {}
  explicit GraphError(const std::string& msg) : Error(Stage::Compile, msg) {}
};

class ReportError : public Error {
 public:
  explicit ReportError(const std::string& msg) : Error(Stage::Report, msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(Stage::Config, msg) {}
};

}  // namespace bpmnsec
