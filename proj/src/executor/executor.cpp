#include "dashgen/executor/executor.hpp"

#include <mutex>
#include <thread>

namespace dashgen::executor {

void AgentMemory::write(const std::string& writer, TaskResult result) {
  if (writer != result.task_id) {
    throw InvariantViolation("task '" + writer + "' may not write entry '" + result.task_id + "'");
  }
  if (!result.ok()) throw InvariantViolation("failed task '" + writer + "' may not write memory");
  std::unique_lock lock(mu_);
  auto id = result.task_id;
  if (!entries_.emplace(id, Entry{std::move(result), Clock::now()}).second) {
    throw InvariantViolation("memory entry '" + id + "' written twice");
  }
}

std::optional<TaskResult> AgentMemory::read(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.result;
}

bool AgentMemory::contains(const std::string& id) const {
  std::shared_lock lock(mu_);
  return entries_.count(id) > 0;
}

std::size_t AgentMemory::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::optional<Clock::time_point> AgentMemory::written_at(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.written;
}

TaskResult DependencyView::result(const std::string& id) const {
  if (!task_.depends_on.count(id)) {
    throw InvariantViolation("task '" + task_.id + "' does not depend on '" + id + "'");
  }
  auto r = memory_.read(id);
  if (!r) throw InvariantViolation("dependency '" + id + "' has no result");
  return *r;
}

std::vector<TaskResult> DependencyView::of_kind(TaskKind kind) const {
  std::vector<TaskResult> out;
  for (const auto& id : task_.depends_on) {
    if (graph_.tasks.at(id).kind == kind) out.push_back(result(id));
  }
  return out;
}

namespace {

TaskResult run_one(const planner::Task& task, const planner::TaskGraph& graph, const Agent& agent,
                   AgentMemory& memory) {
  TaskResult r;
  r.task_id = task.id;
  r.started = Clock::now();
  try {
    AgentContext ctx{task, DependencyView(memory, graph, task)};
    auto out = agent(ctx);
    r.payload = std::move(out.payload);
    r.diagnostics = std::move(out.diagnostics);
    r.status = TaskStatus::Succeeded;
  } catch (const std::exception& e) {
    r.status = TaskStatus::Failed;
    r.payload.reset();
    r.diagnostics = {e.what()};
  } catch (...) {
    r.status = TaskStatus::Failed;
    r.payload.reset();
    r.diagnostics = {"agent raised a non-standard exception"};
  }
  r.completed = Clock::now();
  if (r.ok()) memory.write(task.id, r);
  return r;
}

}  // namespace

std::map<std::string, TaskResult> execute_plan(const planner::ExecutionPlan& plan,
                                               const planner::TaskGraph& graph,
                                               const Registry& registry, AgentMemory& memory) {
  if (memory.size() != 0) throw InvariantViolation("agent memory must start empty");
  if (plan.task_count() != graph.size()) throw InvariantViolation("plan does not cover the task graph");
  for (const auto& wave : plan.waves) {
    for (const auto& id : wave) {
      auto it = graph.tasks.find(id);
      if (it == graph.tasks.end()) throw InvariantViolation("plan names unknown task '" + id + "'");
      if (!registry.count(it->second.kind)) {
        throw MissingAgent("no agent registered for " + std::string(enum_name(it->second.kind)));
      }
    }
  }

  std::map<std::string, TaskResult> results;
  for (const auto& wave : plan.waves) {
    std::vector<const planner::Task*> runnable;
    for (const auto& id : wave) {
      const auto& task = graph.tasks.at(id);
      std::string failed_dep;
      for (const auto& dep : task.depends_on) {
        auto it = results.find(dep);
        if (it == results.end()) throw InvariantViolation("task '" + id + "' scheduled before '" + dep + "'");
        if (!it->second.ok()) {
          failed_dep = dep;
          break;
        }
      }
      if (!failed_dep.empty()) {
        TaskResult r;
        r.task_id = id;
        r.status = TaskStatus::Failed;
        r.diagnostics = {"dependency failed: " + failed_dep};
        r.started = r.completed = Clock::now();
        results.emplace(id, std::move(r));
      } else {
        runnable.push_back(&task);
      }
    }

    std::vector<TaskResult> wave_results(runnable.size());
    if (runnable.size() == 1) {
      wave_results[0] = run_one(*runnable[0], graph, registry.at(runnable[0]->kind), memory);
    } else {
      std::vector<std::jthread> workers;
      workers.reserve(runnable.size());
      for (std::size_t i = 0; i < runnable.size(); ++i) {
        workers.emplace_back([&, i] {
          wave_results[i] = run_one(*runnable[i], graph, registry.at(runnable[i]->kind), memory);
        });
      }
    }  // jthreads join here: the wave barrier
    for (auto& r : wave_results) {
      auto id = r.task_id;
      results.emplace(std::move(id), std::move(r));
    }
  }
  return results;
}

}  // namespace dashgen::executor
