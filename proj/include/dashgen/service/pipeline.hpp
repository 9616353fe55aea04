#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dashgen/dsl/types.hpp"
#include "dashgen/evaluator/evaluator.hpp"
#include "dashgen/executor/executor.hpp"
#include "dashgen/knowledge/knowledge.hpp"
#include "dashgen/planner/planner.hpp"
#include "dashgen/provider/provider.hpp"

namespace dashgen::service {

struct PipelineOptions {
  std::uint64_t seed = 42;
  int iteration_budget = 2;       // planning rounds before giving up
  std::size_t knowledge_k = 3;    // retrieved documents per prompt
};

/// Exactly one of `utterance`, `selection` or `tasks` drives the run.
struct PipelineInput {
  std::optional<DashboardSpec> current;
  std::optional<std::string> utterance;
  std::optional<std::string> selection;       // planner selection id
  std::optional<std::vector<planner::Task>> tasks;
  std::vector<planner::ConversationTurn> context;
};

struct PipelineOutcome {
  DashboardSpec spec;
  evaluator::Verdict verdict;
  std::vector<planner::Task> tasks;  // last round, after expansion
  planner::ExecutionPlan plan;
  int iterations = 0;
  std::string summary;
  std::vector<std::string> task_summaries;
  std::vector<std::string> diagnostics;
};

/// One-line description of a task, used for history and conversation context.
std::string describe_task(const planner::Task& task);

/// Agents for every task kind over a fixed base spec. Content agents return
/// deltas; the Evaluate agent merges them in task-id order, applies layout
/// and style results and returns the assembled spec with its verdict.
executor::Registry make_registry(const std::optional<DashboardSpec>& base, const provider::Provider& provider,
                                 const std::vector<std::string>& knowledge, std::uint64_t seed);

/// Plan, execute, evaluate; re-plans with the violations appended while the
/// budget lasts. Throws PipelineFailed (with the last violations),
/// NoCurrentSpec, UnknownTemplate, ProviderError, UnparsableIntent, and the
/// first failing agent's own error.
PipelineOutcome run_pipeline(const PipelineInput& input, const provider::Provider& provider,
                             const knowledge::KnowledgeBase* knowledge, const PipelineOptions& options = {});

}  // namespace dashgen::service
