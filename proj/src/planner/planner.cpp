#include "dashgen/planner/planner.hpp"

#include <algorithm>
#include <cstdio>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/json_schema.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"
#include "dashgen/dsl/dsl.hpp"

namespace dashgen::planner {

using nlohmann::json;

namespace {

TaskKind kind_from(const std::string& name) {
  auto k = enum_from<TaskKind>(name);
  if (!k) throw InvariantViolation("unknown task kind '" + name + "'");
  return *k;
}

std::vector<Violation> validate_against(const json& instance, const std::string& definition,
                                        const std::string& root) {
  const auto& schemas = resources::json("task_schemas.json");
  json wrapper = {{"definitions", schemas.at("definitions")},
                  {"$ref", "#/definitions/" + definition}};
  return schema::validate(instance, wrapper, root);
}

std::string describe(const std::vector<Violation>& v) {
  std::string out;
  for (const auto& x : v) {
    if (!out.empty()) out += "; ";
    out += x.path + ": " + x.message;
  }
  return out;
}

constexpr const char* kIntentInstructions =
    "You plan edits to an industrial dashboard prototype. Answer with JSON only: "
    "{\"tasks\": [{\"kind\": <CreateViews|ModifyView|ModifyLayout|ModifyStyle|ModifyContent|"
    "SimulateData>, \"payload\": {...}}]}. CreateViews payload: {\"request\": text, \"title\"?, "
    "\"domain\"?, \"views\"?: [{\"title\", \"analysis_task\", \"fields\": [{\"name\", \"kind\", "
    "\"unit\"?}], \"chart_type\"?}]}. Use the earlier conversation to resolve references.";

std::vector<Task> parse_intent_answer(const std::string& answer) {
  json j;
  try {
    j = json::parse(strip_code_fence(answer));
  } catch (const json::parse_error& e) {
    throw ValidationError({{"schema", "$", std::string("answer is not JSON: ") + e.what()}});
  }
  auto violations = validate_against(j, "intent_response", "$");
  if (!violations.empty()) throw ValidationError(std::move(violations));
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < j["tasks"].size(); ++i) {
    const auto& jt = j["tasks"][i];
    Task t;
    t.id = task_id(i + 1);
    t.kind = kind_from(jt["kind"].get<std::string>());
    t.payload = jt["payload"];
    auto v = validate_payload(t.kind, t.payload);
    if (!v.empty()) {
      for (auto& x : v) x.path = "tasks[" + std::to_string(i) + "].payload" + (x.path.empty() ? "" : "." + x.path);
      throw ValidationError(std::move(v));
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> TaskGraph::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [id, t] : tasks) {
    for (const auto& dep : t.depends_on) out.emplace_back(dep, id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ExecutionPlan::task_count() const {
  std::size_t n = 0;
  for (const auto& w : waves) n += w.size();
  return n;
}

json to_json(const Task& task) {
  return {{"id", task.id},
          {"kind", std::string(enum_name(task.kind))},
          {"payload", task.payload},
          {"depends_on", task.depends_on}};
}

Task task_from_json(const json& j) {
  Task t;
  t.id = j.at("id").get<std::string>();
  t.kind = kind_from(j.at("kind").get<std::string>());
  t.payload = j.value("payload", json::object());
  if (j.contains("depends_on")) t.depends_on = j["depends_on"].get<std::set<std::string>>();
  return t;
}

json to_json(const ExecutionPlan& plan) { return {{"waves", plan.waves}}; }

json to_json(const TaskGraph& graph) {
  json tasks = json::array();
  for (const auto& [id, t] : graph.tasks) tasks.push_back(to_json(t));
  json edges = json::array();
  for (const auto& [from, to] : graph.edges()) edges.push_back({from, to});
  return {{"tasks", tasks}, {"edges", edges}};
}

const std::map<TaskKind, std::set<TaskKind>>& dependency_table() {
  static const auto table = [] {
    std::map<TaskKind, std::set<TaskKind>> out;
    const auto& j = resources::json("task_dependencies.json").at("depends_on");
    for (const auto& [name, deps] : j.items()) {
      const auto kind = kind_from(name);
      auto& set = out[kind];
      for (const auto& d : deps) {
        if (d.get<std::string>() == "*") {
          for (auto k : enum_values<TaskKind>()) {
            if (k != kind && k != TaskKind::Evaluate) set.insert(k);
          }
        } else {
          set.insert(kind_from(d.get<std::string>()));
        }
      }
    }
    return out;
  }();
  return table;
}

std::vector<Violation> validate_payload(TaskKind kind, const json& payload) {
  auto v = validate_against(payload, std::string(enum_name(kind)), "");
  if (v.empty() && kind == TaskKind::ModifyContent) {
    try {
      (void)dsl::patch_from_json(payload.at("patch"));
    } catch (const Error& e) {
      v.push_back({"schema", "patch", e.what()});
    } catch (const json::exception& e) {
      v.push_back({"schema", "patch", e.what()});
    }
  }
  return v;
}

std::string task_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%02zu", index);
  return buf;
}

Task task_from_selection(const std::string& selection) {
  const auto colon = selection.find(':');
  if (colon == std::string::npos) throw UnknownTemplate("malformed selection '" + selection + "'");
  const auto action = selection.substr(0, colon);
  const auto arg = selection.substr(colon + 1);
  Task t;
  t.id = task_id(1);
  if (action == "modify_layout") {
    if (!resources::exists("layout_templates/" + arg + ".dash.json")) {
      throw UnknownTemplate("unknown layout template '" + arg + "'");
    }
    t.kind = TaskKind::ModifyLayout;
    t.payload = {{"template", arg}};
  } else if (action == "modify_style") {
    const auto& presets = resources::json("palettes.json").at("presets");
    if (!presets.contains(arg)) throw UnknownTemplate("unknown palette preset '" + arg + "'");
    t.kind = TaskKind::ModifyStyle;
    t.payload = {{"palette", arg}};
  } else if (action == "modify_content") {
    json patch;
    try {
      patch = json::parse(arg);
    } catch (const json::parse_error& e) {
      throw UnparsableIntent(std::string("content selection is not JSON: ") + e.what());
    }
    t.kind = TaskKind::ModifyContent;
    t.payload = {{"patch", patch}};
  } else {
    throw UnknownTemplate("unknown selection action '" + action + "'");
  }
  if (auto v = validate_payload(t.kind, t.payload); !v.empty()) {
    throw UnparsableIntent("selection payload invalid: " + describe(v));
  }
  return t;
}

std::vector<Task> extract_intent(const IntentRequest& request, const provider::Provider& provider) {
  if (request.utterance.has_value() == request.selection.has_value()) {
    throw InvariantViolation("intent request needs exactly one of utterance or selection");
  }
  if (request.selection) return {task_from_selection(*request.selection)};

  provider::Prompt prompt;
  prompt.stage = "intent";
  prompt.system = kIntentInstructions;
  prompt.user = *request.utterance;
  prompt.context_docs = request.knowledge;
  for (const auto& turn : request.context) {
    std::string doc = "Earlier request: " + turn.utterance;
    for (const auto& s : turn.task_summaries) doc += "\n- " + s;
    prompt.context_docs.push_back(std::move(doc));
  }

  constexpr int kAttempts = 2;  // first answer plus one re-prompt
  std::string last_error;
  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    try {
      return parse_intent_answer(provider.complete(prompt));
    } catch (const ValidationError& e) {
      last_error = describe(e.violations());
      prompt.user = *request.utterance + "\n\nYour previous answer was rejected: " + last_error +
                    "\nAnswer again with valid JSON.";
    }
  }
  throw UnparsableIntent("intent answer failed validation twice: " + last_error);
}

std::vector<Task> expand_batch(std::vector<Task> tasks) {
  auto has = [&](TaskKind k) {
    return std::any_of(tasks.begin(), tasks.end(), [&](const Task& t) { return t.kind == k; });
  };
  std::set<std::string> ids;
  for (const auto& t : tasks) ids.insert(t.id);
  std::size_t next = tasks.size() + 1;
  auto add = [&](TaskKind k) {
    while (ids.count(task_id(next))) ++next;
    Task t;
    t.id = task_id(next++);
    t.kind = k;
    ids.insert(t.id);
    tasks.push_back(std::move(t));
  };
  const bool creates = has(TaskKind::CreateViews);
  if (creates && !has(TaskKind::ArrangeLayout) && !has(TaskKind::ModifyLayout)) add(TaskKind::ArrangeLayout);
  if (creates && !has(TaskKind::Stylize)) add(TaskKind::Stylize);
  if (!has(TaskKind::Evaluate)) add(TaskKind::Evaluate);
  return tasks;
}

TaskGraph classify_dependencies(const std::vector<Task>& tasks) {
  TaskGraph g;
  for (const auto& t : tasks) {
    if (!g.tasks.emplace(t.id, t).second) throw DuplicateTaskId("duplicate task id '" + t.id + "'");
  }
  const auto& table = dependency_table();
  for (auto& [id, t] : g.tasks) {
    if (t.depends_on.count(id)) throw InvariantViolation("task '" + id + "' depends on itself");
    for (const auto& dep : t.depends_on) {
      if (!g.tasks.count(dep)) {
        throw UnknownDependency("task '" + id + "' depends on unknown task '" + dep + "'");
      }
    }
    auto it = table.find(t.kind);
    if (it == table.end()) continue;
    for (const auto& [other_id, other] : g.tasks) {
      if (other_id != id && it->second.count(other.kind)) t.depends_on.insert(other_id);
    }
  }
  return g;
}

ExecutionPlan schedule_waves(const TaskGraph& graph) {
  std::map<std::string, std::size_t> pending;
  std::map<std::string, std::vector<std::string>> dependents;
  for (const auto& [id, t] : graph.tasks) {
    pending[id] = t.depends_on.size();
    for (const auto& dep : t.depends_on) {
      if (!graph.tasks.count(dep)) {
        throw UnknownDependency("task '" + id + "' depends on unknown task '" + dep + "'");
      }
      dependents[dep].push_back(id);
    }
  }

  ExecutionPlan plan;
  std::vector<std::string> ready;
  for (const auto& [id, n] : pending) {
    if (n == 0) ready.push_back(id);
  }
  std::size_t placed = 0;
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end());
    std::vector<std::string> next;
    for (const auto& id : ready) {
      for (const auto& d : dependents[id]) {
        if (--pending[d] == 0) next.push_back(d);
      }
    }
    placed += ready.size();
    plan.waves.push_back(std::move(ready));
    ready = std::move(next);
  }
  if (placed == graph.tasks.size()) return plan;

  // Every unplaced task still waits on an unplaced prerequisite, so walking
  // prerequisites from any of them must revisit a task.
  std::string cur;
  for (const auto& [id, n] : pending) {
    if (n > 0) {
      cur = id;
      break;
    }
  }
  std::vector<std::string> walk;
  std::map<std::string, std::size_t> seen;
  while (!seen.count(cur)) {
    seen[cur] = walk.size();
    walk.push_back(cur);
    for (const auto& dep : graph.tasks.at(cur).depends_on) {
      if (pending[dep] > 0) {
        cur = dep;
        break;
      }
    }
  }
  std::vector<std::string> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen[cur]), walk.end());
  std::reverse(cycle.begin(), cycle.end());  // prerequisite first
  throw CycleDetected(cycle);
}

}  // namespace dashgen::planner
