#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "dashgen/dsl/types.hpp"
#include "dashgen/provider/provider.hpp"
#include "json.hpp"

namespace dashgen {

enum class TaskKind {
  CreateViews, ModifyView, ModifyLayout, ModifyStyle, ModifyContent, SimulateData,
  ArrangeLayout, Stylize, Evaluate
};

template <>
struct EnumTraits<TaskKind> {
  static constexpr std::array names{"CreateViews",   "ModifyView",   "ModifyLayout",
                                    "ModifyStyle",   "ModifyContent", "SimulateData",
                                    "ArrangeLayout", "Stylize",      "Evaluate"};
};

}  // namespace dashgen

namespace dashgen::planner {

struct Task {
  std::string id;
  TaskKind kind = TaskKind::CreateViews;
  nlohmann::json payload = nlohmann::json::object();
  std::set<std::string> depends_on;

  bool operator==(const Task&) const = default;
};

/// Tasks keyed by id; edges are the union of every task's depends_on.
struct TaskGraph {
  std::map<std::string, Task> tasks;

  /// (prerequisite, dependent) pairs in lexical order.
  std::vector<std::pair<std::string, std::string>> edges() const;
  std::size_t size() const { return tasks.size(); }
};

struct ExecutionPlan {
  std::vector<std::vector<std::string>> waves;

  std::size_t task_count() const;
  bool operator==(const ExecutionPlan&) const = default;
};

struct ConversationTurn {
  std::string utterance;
  std::vector<std::string> task_summaries;
};

/// Either an utterance or a predefined selection triggers the request.
struct IntentRequest {
  std::optional<std::string> utterance;
  std::optional<std::string> selection;
  std::vector<ConversationTurn> context;
  std::vector<std::string> knowledge;  // retrieved documents forwarded to the provider
};

nlohmann::json to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExecutionPlan& plan);
nlohmann::json to_json(const TaskGraph& graph);

/// Kind-level dependency table loaded from task_dependencies.json:
/// kind -> kinds it waits for ("*" means every other non-Evaluate kind).
const std::map<TaskKind, std::set<TaskKind>>& dependency_table();

/// Violations of the payload schema for `kind` (empty when valid).
std::vector<Violation> validate_payload(TaskKind kind, const nlohmann::json& payload);

/// Zero-padded sequential ids ("t01", "t02", ...) so lexical order equals
/// creation order.
std::string task_id(std::size_t index);

/// Utterance: one provider call on stage "intent", re-prompted once with the
/// validation error when the answer does not fit the task schemas.
/// Selection ("modify_layout:<template>", "modify_style:<palette>",
/// "modify_content:<patch json>") bypasses the provider.
/// Throws ProviderError, UnparsableIntent, UnknownTemplate.
std::vector<Task> extract_intent(const IntentRequest& request, const provider::Provider& provider);

/// Parses a selection id without touching the provider.
Task task_from_selection(const std::string& selection);

/// Appends the follow-up tasks a batch needs to produce a prototype:
/// ArrangeLayout and Stylize when views are created, Evaluate always.
std::vector<Task> expand_batch(std::vector<Task> tasks);

/// Adds table edges to explicit depends_on. Throws DuplicateTaskId,
/// UnknownDependency, InvariantViolation (self dependency).
TaskGraph classify_dependencies(const std::vector<Task>& tasks);

/// Kahn layering; each wave sorted lexically. Throws CycleDetected.
ExecutionPlan schedule_waves(const TaskGraph& graph);

}  // namespace dashgen::planner
