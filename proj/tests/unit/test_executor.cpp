#include "doctest.h"

#include <atomic>
#include <thread>

#include "dashgen/executor/executor.hpp"

using namespace dashgen;
using namespace dashgen::executor;
using namespace std::chrono_literals;
using planner::Task;

namespace {

Task make(std::string id, TaskKind kind, std::set<std::string> deps = {}) {
  Task t;
  t.id = std::move(id);
  t.kind = kind;
  t.depends_on = std::move(deps);
  return t;
}

struct Fixture {
  planner::TaskGraph graph;
  planner::ExecutionPlan plan;

  explicit Fixture(const std::vector<Task>& tasks)
      : graph(planner::classify_dependencies(tasks)), plan(planner::schedule_waves(graph)) {}
};

Fixture worked_batch() {
  return Fixture({make("M", TaskKind::CreateViews), make("S", TaskKind::Stylize),
                  make("A", TaskKind::ArrangeLayout), make("C", TaskKind::ModifyStyle)});
}

Agent echo(std::string tag) {
  return [tag](const AgentContext& ctx) {
    std::string seen;
    for (const auto& r : ctx.dependencies.of_kind(TaskKind::CreateViews)) seen += r.as<std::string>();
    return AgentOutput{tag + "(" + seen + ")", {}};
  };
}

}  // namespace

TEST_CASE("all agents succeed and dependents observe the creator's payload") {
  auto f = worked_batch();
  Registry reg{{TaskKind::CreateViews, echo("views")},
               {TaskKind::Stylize, echo("style")},
               {TaskKind::ArrangeLayout, echo("layout")},
               {TaskKind::ModifyStyle, echo("palette")}};
  AgentMemory mem;
  auto results = execute_plan(f.plan, f.graph, reg, mem);
  REQUIRE(results.size() == 4);
  for (const auto& [id, r] : results) CHECK(r.ok());
  CHECK(results.at("A").as<std::string>() == "layout(views())");
  CHECK(results.at("S").as<std::string>() == "style(views())");
  CHECK(results.at("C").as<std::string>() == "palette()");
  CHECK(mem.size() == 4);
  // Happens-before: every dependency was stored before its dependent started.
  for (const auto& [from, to] : f.graph.edges()) CHECK(*mem.written_at(from) <= results.at(to).started);
}

TEST_CASE("a failing creator fails its dependents but not independent work") {
  auto f = worked_batch();
  std::atomic<int> dependent_runs{0};
  Agent counted = [&](const AgentContext&) {
    ++dependent_runs;
    return AgentOutput{1, {}};
  };
  Registry reg{{TaskKind::CreateViews, [](const AgentContext&) -> AgentOutput { throw std::runtime_error("no views"); }},
               {TaskKind::Stylize, counted},
               {TaskKind::ArrangeLayout, counted},
               {TaskKind::ModifyStyle, echo("palette")}};
  AgentMemory mem;
  auto results = execute_plan(f.plan, f.graph, reg, mem);
  CHECK_FALSE(results.at("M").ok());
  CHECK(results.at("M").diagnostics == std::vector<std::string>{"no views"});
  CHECK(results.at("A").diagnostics == std::vector<std::string>{"dependency failed: M"});
  CHECK(results.at("S").diagnostics == std::vector<std::string>{"dependency failed: M"});
  CHECK(results.at("C").ok());
  CHECK(dependent_runs == 0);
  CHECK(mem.contains("C"));
  CHECK_FALSE(mem.contains("M"));
}

TEST_CASE("failure cascades transitively") {
  Fixture f({make("a", TaskKind::ModifyStyle), make("b", TaskKind::ModifyStyle, {"a"}),
             make("c", TaskKind::ModifyStyle, {"b"})});
  Registry reg{{TaskKind::ModifyStyle, [](const AgentContext& ctx) -> AgentOutput {
                  if (ctx.task.id == "a") throw std::runtime_error("boom");
                  return {0, {}};
                }}};
  AgentMemory mem;
  auto r = execute_plan(f.plan, f.graph, reg, mem);
  CHECK(r.at("c").diagnostics == std::vector<std::string>{"dependency failed: b"});
}

TEST_CASE("missing agent is reported before anything runs") {
  auto f = worked_batch();
  std::atomic<int> runs{0};
  Agent count = [&](const AgentContext&) {
    ++runs;
    return AgentOutput{};
  };
  Registry reg{{TaskKind::CreateViews, count}, {TaskKind::Stylize, count}, {TaskKind::ModifyStyle, count}};
  AgentMemory mem;
  CHECK_THROWS_AS(execute_plan(f.plan, f.graph, reg, mem), MissingAgent);
  CHECK(runs == 0);
}

TEST_CASE("memory is write-once and owner-only") {
  AgentMemory mem;
  TaskResult r;
  r.task_id = "a";
  CHECK_THROWS_AS(mem.write("b", r), InvariantViolation);
  mem.write("a", r);
  CHECK_THROWS_AS(mem.write("a", r), InvariantViolation);
  TaskResult failed;
  failed.task_id = "f";
  failed.status = TaskStatus::Failed;
  failed.diagnostics = {"x"};
  CHECK_THROWS_AS(mem.write("f", failed), InvariantViolation);

  auto f = worked_batch();
  Registry reg{{TaskKind::CreateViews, echo("v")}, {TaskKind::Stylize, echo("s")},
               {TaskKind::ArrangeLayout, echo("a")}, {TaskKind::ModifyStyle, echo("c")}};
  CHECK_THROWS_AS(execute_plan(f.plan, f.graph, reg, mem), InvariantViolation);  // memory not empty
}

TEST_CASE("agents cannot read results outside their dependencies") {
  auto f = worked_batch();
  Registry reg{{TaskKind::CreateViews, echo("v")},
               {TaskKind::Stylize, [](const AgentContext& ctx) { return AgentOutput{ctx.dependencies.result("C"), {}}; }},
               {TaskKind::ArrangeLayout, echo("a")},
               {TaskKind::ModifyStyle, echo("c")}};
  AgentMemory mem;
  auto r = execute_plan(f.plan, f.graph, reg, mem);
  CHECK_FALSE(r.at("S").ok());
  CHECK(r.at("S").diagnostics[0].find("does not depend on 'C'") != std::string::npos);
}

TEST_CASE("same-wave tasks run concurrently") {
  Fixture f({make("a", TaskKind::ModifyStyle), make("b", TaskKind::ModifyStyle), make("c", TaskKind::ModifyStyle),
             make("d", TaskKind::ModifyStyle, {"a", "b", "c"})});
  REQUIRE(f.plan.waves.size() == 2);
  Registry reg{{TaskKind::ModifyStyle, [](const AgentContext& ctx) {
                  std::this_thread::sleep_for(100ms);
                  return AgentOutput{ctx.task.id, {}};
                }}};
  AgentMemory mem;
  const auto t0 = Clock::now();
  auto r = execute_plan(f.plan, f.graph, reg, mem);
  const auto elapsed = Clock::now() - t0;
  CHECK(elapsed < 240ms);
  CHECK(elapsed >= 200ms);
  CHECK(r.size() == 4);
}

TEST_CASE("payloads are identical across runs") {
  auto run = [] {
    auto f = worked_batch();
    Registry reg{{TaskKind::CreateViews, echo("v")}, {TaskKind::Stylize, echo("s")},
                 {TaskKind::ArrangeLayout, echo("a")}, {TaskKind::ModifyStyle, echo("c")}};
    AgentMemory mem;
    std::map<std::string, std::string> out;
    for (const auto& [id, r] : execute_plan(f.plan, f.graph, reg, mem)) out[id] = r.as<std::string>();
    return out;
  };
  CHECK(run() == run());
}
