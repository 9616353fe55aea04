#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dashgen {

/// A single rule failure: which rule, where in the document, and why.
struct Violation {
  std::string rule;
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Base of every error the engine raises. `code()` is a stable identifier
/// (e.g. "ValidationError") that the service maps onto HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define DASHGEN_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t line, std::size_t column)
      : Error("SyntaxError", message + " at line " + std::to_string(line) +
                                 ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error("ValidationError", describe(violations)),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }
  const std::string& rule() const { return violations_.front().rule; }
  const std::string& path() const { return violations_.front().path; }

 private:
  static std::string describe(const std::vector<Violation>& v) {
    if (v.empty()) return "validation failed";
    std::string out = v.front().rule + " at " + v.front().path + ": " + v.front().message;
    if (v.size() > 1) out += " (+" + std::to_string(v.size() - 1) + " more)";
    return out;
  }

  std::vector<Violation> violations_;
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, int attempts, int status = 0)
      : Error("ProviderError", message + " (attempts=" + std::to_string(attempts) + ")"),
        attempts_(attempts),
        status_(status) {}

  int attempts() const noexcept { return attempts_; }
  /// Last HTTP status seen, 0 for transport failures and mock errors.
  int status() const noexcept { return status_; }

 private:
  int attempts_;
  int status_;
};

class CycleDetected : public Error {
 public:
  explicit CycleDetected(std::vector<std::string> cycle)
      : Error("CycleDetected", describe(cycle)), cycle_(std::move(cycle)) {}

  /// Task ids along one concrete cycle; the first id is repeated at the end.
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  static std::string describe(const std::vector<std::string>& c) {
    std::string out = "dependency cycle:";
    for (const auto& id : c) out += " " + id;
    return out;
  }

  std::vector<std::string> cycle_;
};

class PipelineFailed : public Error {
 public:
  PipelineFailed(const std::string& message, std::vector<Violation> violations)
      : Error("PipelineFailed", message), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

DASHGEN_DEFINE_ERROR(ResourceNotFound);
DASHGEN_DEFINE_ERROR(TargetNotFound);
DASHGEN_DEFINE_ERROR(InvariantViolation);
DASHGEN_DEFINE_ERROR(UnparsableIntent);
DASHGEN_DEFINE_ERROR(DuplicateTaskId);
DASHGEN_DEFINE_ERROR(UnknownDependency);
DASHGEN_DEFINE_ERROR(MissingAgent);
DASHGEN_DEFINE_ERROR(EncodingImpossible);
DASHGEN_DEFINE_ERROR(OutOfBounds);
DASHGEN_DEFINE_ERROR(EmptyNode);
DASHGEN_DEFINE_ERROR(TooManyViews);
DASHGEN_DEFINE_ERROR(RuleViolation);
DASHGEN_DEFINE_ERROR(EmptyInput);
DASHGEN_DEFINE_ERROR(EvaluationRequired);
DASHGEN_DEFINE_ERROR(SlotTooSmall);
DASHGEN_DEFINE_ERROR(StorageError);
DASHGEN_DEFINE_ERROR(SessionNotFound);
DASHGEN_DEFINE_ERROR(NoCurrentSpec);
DASHGEN_DEFINE_ERROR(UnknownTemplate);
DASHGEN_DEFINE_ERROR(ConfigError);

#undef DASHGEN_DEFINE_ERROR

}  // namespace dashgen
