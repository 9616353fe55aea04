#pragma once

#include <any>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "dashgen/planner/planner.hpp"

namespace dashgen::executor {

using Clock = std::chrono::steady_clock;

enum class TaskStatus { Succeeded, Failed };

struct TaskResult {
  std::string task_id;
  TaskStatus status = TaskStatus::Succeeded;
  std::any payload;
  std::vector<std::string> diagnostics;  // non-empty when Failed
  Clock::time_point started{};
  Clock::time_point completed{};

  bool ok() const { return status == TaskStatus::Succeeded; }

  template <typename T>
  const T& as() const {
    const T* p = std::any_cast<T>(&payload);
    if (p == nullptr) throw InvariantViolation("task '" + task_id + "' payload has unexpected type");
    return *p;
  }
};

/// Results shared between agents. Each id is written once, by its own task,
/// after it succeeded; reads may happen concurrently.
class AgentMemory {
 public:
  /// Throws InvariantViolation when `writer` differs from the result's id,
  /// the result is not a success, or the id was already written.
  void write(const std::string& writer, TaskResult result);

  std::optional<TaskResult> read(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::size_t size() const;
  /// Time each entry was stored.
  std::optional<Clock::time_point> written_at(const std::string& id) const;

 private:
  struct Entry {
    TaskResult result;
    Clock::time_point written;
  };
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> entries_;
};

/// Read access limited to the results a task depends on.
class DependencyView {
 public:
  DependencyView(const AgentMemory& memory, const planner::TaskGraph& graph, const planner::Task& task)
      : memory_(memory), graph_(graph), task_(task) {}

  const std::set<std::string>& ids() const { return task_.depends_on; }
  /// Throws InvariantViolation for ids outside the task's dependencies.
  TaskResult result(const std::string& id) const;
  /// Dependency results whose task has `kind`, in id order.
  std::vector<TaskResult> of_kind(TaskKind kind) const;

 private:
  const AgentMemory& memory_;
  const planner::TaskGraph& graph_;
  const planner::Task& task_;
};

struct AgentContext {
  const planner::Task& task;
  DependencyView dependencies;
};

struct AgentOutput {
  std::any payload;
  std::vector<std::string> diagnostics;
};

/// Throwing marks the task Failed with the exception text as diagnostic.
using Agent = std::function<AgentOutput(const AgentContext&)>;
using Registry = std::map<TaskKind, Agent>;

/// Runs waves in order with a barrier between them; tasks of one wave run on
/// their own threads. Dependents of a failed task are marked Failed with
/// "dependency failed: <id>" and never run.
/// Throws MissingAgent (checked before anything runs), InvariantViolation
/// (non-empty memory, plan/graph mismatch).
std::map<std::string, TaskResult> execute_plan(const planner::ExecutionPlan& plan,
                                               const planner::TaskGraph& graph,
                                               const Registry& registry, AgentMemory& memory);

}  // namespace dashgen::executor
