#include "dashgen/service/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <mutex>
#include <set>

#include "dashgen/assembly/assembly.hpp"
#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/composition/composition.hpp"
#include "dashgen/dsl/dsl.hpp"
#include "dashgen/stylization/stylization.hpp"

namespace dashgen::service {

using nlohmann::json;
using planner::Task;

namespace {

// --- agent payloads -------------------------------------------------------------

struct ContentDelta {
  std::vector<ViewSpec> added;               // ids are assigned when merged
  std::map<std::string, ViewSpec> replaced;  // keyed by view id
  std::optional<dsl::SpecPatch> patch;
  std::string title;
  std::string domain;
};

struct StyleOverride {
  std::optional<std::string> preset;
  std::optional<Palette> palette;
  std::string theme_hint;
};

struct Assembled {
  DashboardSpec spec;
  evaluator::Verdict verdict;
};

constexpr TaskKind kContentKinds[] = {TaskKind::CreateViews, TaskKind::ModifyView, TaskKind::ModifyContent,
                                      TaskKind::SimulateData};

bool has_views(const std::optional<DashboardSpec>& s) { return s && !s->views.empty(); }

int view_number(const std::string& id) {
  if (id.size() < 2 || id[0] != 'v') return 0;
  int n = 0;
  const auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), n);
  return ec == std::errc{} && ptr == id.data() + id.size() ? n : 0;
}

std::string next_view_id(const DashboardSpec& spec) {
  int top = 0;
  for (const auto& v : spec.views) top = std::max(top, view_number(v.id));
  return "v" + std::to_string(top + 1);
}

// Content deltas in task-id order. Patches and replacements act on the base
// first; added views are appended last so patches never see unplaced views.
DashboardSpec merge_content(const std::optional<DashboardSpec>& base, const executor::DependencyView& deps) {
  DashboardSpec spec = base.value_or(DashboardSpec{});
  std::vector<std::pair<std::string, const ContentDelta*>> deltas;
  std::vector<executor::TaskResult> keep;
  for (auto kind : kContentKinds) {
    for (auto& r : deps.of_kind(kind)) keep.push_back(std::move(r));
  }
  std::sort(keep.begin(), keep.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  for (const auto& r : keep) deltas.emplace_back(r.task_id, &r.as<ContentDelta>());

  for (const auto& [id, d] : deltas) {
    for (const auto& [view_id, view] : d->replaced) {
      if (auto* v = spec.find_view(view_id)) *v = view;
    }
    if (d->patch) spec = dsl::apply_patch(spec, *d->patch);
  }
  for (const auto& [id, d] : deltas) {
    if (spec.title.empty()) spec.title = d->title;
    if (spec.domain.empty()) spec.domain = d->domain;
    for (auto view : d->added) {
      view.id = next_view_id(spec);
      spec.views.push_back(std::move(view));
    }
  }
  if (spec.domain.empty()) spec.domain = "generic";
  if (spec.title.empty()) spec.title = "Dashboard";
  return spec;
}

template <typename T>
std::optional<T> last_of_kind(const executor::DependencyView& deps, TaskKind kind) {
  auto results = deps.of_kind(kind);
  if (results.empty()) return std::nullopt;
  return results.back().as<T>();
}

composition::DisplayTask display_task_of(const ViewSpec& view, const ChartSpec& chart) {
  composition::DisplayTask t;
  t.title = view.title;
  t.analysis_task = view.analysis_task;
  for (const auto& f : chart.dataset.fields) t.fields.push_back({f.name, f.kind, f.unit, false});
  const auto rows = static_cast<int>(chart.dataset.rows.size());
  if (rows >= 2) t.categories = std::min(rows, 24);
  t.preferred_chart = chart.chart_type;
  return t;
}

std::optional<composition::MeasureShape> shape_from(const json& payload) {
  if (!payload.contains("shape")) return std::nullopt;
  const auto s = payload["shape"].get<std::string>();
  if (s == "trend") return composition::MeasureShape::Trend;
  if (s == "seasonal") return composition::MeasureShape::Seasonal;
  if (s == "uniform") return composition::MeasureShape::Uniform;
  return composition::MeasureShape::Pareto;
}

const ViewSpec& base_view(const std::optional<DashboardSpec>& base, const std::string& id) {
  if (!base) throw NoCurrentSpec("there is no prototype to modify yet");
  const auto* v = base->find_view(id);
  if (!v) throw TargetNotFound("no view '" + id + "'");
  return *v;
}

std::string clip(const std::string& s, std::size_t n) { return s.size() <= n ? s : s.substr(0, n - 3) + "..."; }

bool is_layout_rule(const std::string& rule) {
  static const std::set<std::string> rules = {"layout-depth", "level1-count", "unplaced-views", "fraction-sums",
                                              "duplicate-ids", "view-placement", "dangling-view-ref"};
  return rules.count(rule) > 0;
}

}  // namespace

std::string describe_task(const Task& task) {
  const auto& p = task.payload;
  std::string out(enum_name(task.kind));
  switch (task.kind) {
    case TaskKind::CreateViews:
      if (p.contains("views")) {
        out += ":";
        for (const auto& v : p["views"]) out += " " + v.value("title", std::string()) + ";";
        out.pop_back();
      } else {
        out += ": " + clip(p.value("request", std::string()), 100);
      }
      break;
    case TaskKind::ModifyView: out += ": " + p.value("view_id", std::string()); break;
    case TaskKind::ModifyLayout: out += ": " + p.value("template", std::string()); break;
    case TaskKind::ModifyStyle:
      if (p.contains("palette")) out += ": palette " + p["palette"].get<std::string>();
      if (p.contains("theme_hint")) out += ": " + p["theme_hint"].get<std::string>();
      break;
    case TaskKind::ModifyContent:
      out += ": " + p["patch"].value("operation", std::string()) + " " + p["patch"].value("target", std::string());
      break;
    case TaskKind::SimulateData: out += ": " + p.value("view_id", std::string("all views")); break;
    default: break;
  }
  return out;
}

executor::Registry make_registry(const std::optional<DashboardSpec>& base, const provider::Provider& provider,
                                 const std::vector<std::string>& knowledge, std::uint64_t seed) {
  executor::Registry r;
  const std::string base_domain = has_views(base) ? base->domain : std::string();

  r[TaskKind::CreateViews] = [=, &provider](const executor::AgentContext& c) {
    auto d = composition::decompose(c.task.payload, provider, knowledge);
    ContentDelta delta;
    const auto domain = base_domain.empty() ? d.domain : base_domain;
    delta.title = d.title;
    delta.domain = d.domain;
    for (std::size_t i = 0; i < d.tasks.size(); ++i) {
      composition::SimulationProfile profile{mix_seed(seed, c.task.id + "/" + std::to_string(i)), domain, std::nullopt};
      delta.added.push_back(composition::compose_view(d.tasks[i], "pending", profile));
    }
    return executor::AgentOutput{delta, d.diagnostics};
  };

  r[TaskKind::ModifyView] = [=](const executor::AgentContext& c) {
    const auto& p = c.task.payload;
    ViewSpec view = base_view(base, p.at("view_id").get<std::string>());
    std::vector<std::string> diagnostics;
    if (p.contains("title")) view.title = p["title"].get<std::string>();
    if (p.contains("importance")) view.importance = p["importance"].get<double>();
    if (p.contains("chart_type")) {
      const auto type = *enum_from<ChartType>(p["chart_type"].get<std::string>());
      const auto old = view.charts.front().chart_type;
      for (std::size_t i = 0; i < view.charts.size(); ++i) {
        auto& chart = view.charts[i];
        // Comparison siblings keep one shared type.
        if (i > 0 && !(view.analysis_task == AnalysisTask::Comparison && chart.chart_type == old)) continue;
        const auto task = display_task_of(view, chart);
        try {
          chart = composition::map_encodings(task, type, chart.dataset);
        } catch (const EncodingImpossible&) {
          composition::SimulationProfile profile{mix_seed(seed, c.task.id + "/" + view.id), base->domain, std::nullopt};
          chart = composition::map_encodings(task, type, composition::simulate_data(task, type, profile));
          diagnostics.push_back("data regenerated to fit " + std::string(enum_name(type)));
        }
      }
    }
    ContentDelta delta;
    delta.replaced[view.id] = view;
    return executor::AgentOutput{delta, diagnostics};
  };

  r[TaskKind::SimulateData] = [=](const executor::AgentContext& c) {
    const auto& p = c.task.payload;
    if (!base) throw NoCurrentSpec("there is no prototype to modify yet");
    std::vector<ViewSpec> targets;
    if (p.contains("view_id")) {
      targets.push_back(base_view(base, p["view_id"].get<std::string>()));
    } else {
      targets = base->views;
    }
    ContentDelta delta;
    for (auto& view : targets) {
      for (std::size_t i = 0; i < view.charts.size(); ++i) {
        auto& chart = view.charts[i];
        const auto task = display_task_of(view, chart);
        composition::SimulationProfile profile{mix_seed(seed, c.task.id + "/" + view.id + "/" + std::to_string(i)),
                                               base->domain, shape_from(p)};
        chart.dataset = composition::simulate_data(task, chart.chart_type, profile);
      }
      delta.replaced[view.id] = view;
    }
    return executor::AgentOutput{delta, {}};
  };

  r[TaskKind::ModifyContent] = [=](const executor::AgentContext& c) {
    if (!base) throw NoCurrentSpec("there is no prototype to modify yet");
    auto patch = dsl::patch_from_json(c.task.payload.at("patch"));
    dsl::apply_patch(*base, patch);  // surfaces bad targets before merging
    ContentDelta delta;
    delta.patch = patch;
    return executor::AgentOutput{delta, {}};
  };

  r[TaskKind::ModifyLayout] = [=](const executor::AgentContext& c) {
    const auto spec = merge_content(base, c.dependencies);
    const auto tmpl = assembly::load_template(c.task.payload.at("template").get<std::string>());
    return executor::AgentOutput{assembly::build_layout_tree(spec.views, tmpl, spec.layout.screen), {}};
  };

  r[TaskKind::ArrangeLayout] = [=](const executor::AgentContext& c) {
    const auto spec = merge_content(base, c.dependencies);
    return executor::AgentOutput{assembly::build_layout_tree(spec.views, std::nullopt, spec.layout.screen), {}};
  };

  r[TaskKind::Stylize] = [=, &provider](const executor::AgentContext& c) {
    const auto spec = merge_content(base, c.dependencies);
    stylization::StyleRequest req;
    req.domain = spec.domain;
    req.theme_hint = c.task.payload.value("theme_hint", std::string());
    req.seed = mix_seed(seed, "style");
    if (has_views(base) && !base->style.palette.colors.empty()) req.current_palette = base->style.palette;
    auto result = stylization::stylize(spec.views, req, provider, knowledge);
    return executor::AgentOutput{result.style, result.diagnostics};
  };

  r[TaskKind::ModifyStyle] = [=, &provider](const executor::AgentContext& c) {
    if (!has_views(base)) throw NoCurrentSpec("there is no prototype to restyle yet");
    const auto& p = c.task.payload;
    StyleOverride o;
    o.theme_hint = p.value("theme_hint", std::string());
    std::vector<std::string> diagnostics;
    const auto kind = stylization::required_palette_kind(base->views);
    if (p.contains("palette")) {
      o.preset = p["palette"].get<std::string>();
      o.palette = stylization::preset_palette(*o.preset, kind);
    } else {
      auto rec = stylization::recommend_palette(base->domain, o.theme_hint, kind, provider, knowledge);
      o.palette = rec.palette;
      diagnostics = rec.diagnostics;
    }
    return executor::AgentOutput{o, diagnostics};
  };

  r[TaskKind::Evaluate] = [=, &provider](const executor::AgentContext& c) {
    Assembled out;
    out.spec = merge_content(base, c.dependencies);
    auto& spec = out.spec;
    std::vector<std::string> diagnostics;

    if (auto layout = last_of_kind<LayoutTree>(c.dependencies, TaskKind::ModifyLayout)) {
      spec.layout = *layout;
    } else if (auto arranged = last_of_kind<LayoutTree>(c.dependencies, TaskKind::ArrangeLayout)) {
      spec.layout = *arranged;
    }

    stylization::StyleRequest req;
    req.domain = spec.domain;
    req.seed = mix_seed(seed, "style");
    if (auto o = last_of_kind<StyleOverride>(c.dependencies, TaskKind::ModifyStyle)) {
      req.theme_hint = o->theme_hint;
      if (o->preset) {
        req.preset = o->preset;
      } else {
        req.current_palette = o->palette;
      }
      auto result = stylization::stylize(spec.views, req, provider, knowledge);
      spec.style = result.style;
      diagnostics.insert(diagnostics.end(), result.diagnostics.begin(), result.diagnostics.end());
    } else if (auto styled = last_of_kind<StyleSpec>(c.dependencies, TaskKind::Stylize)) {
      spec.style = *styled;
    } else if (spec.style.palette.colors.empty() && !spec.views.empty()) {
      auto result = stylization::stylize(spec.views, req, provider, knowledge);
      spec.style = result.style;
      diagnostics.insert(diagnostics.end(), result.diagnostics.begin(), result.diagnostics.end());
    }

    out.verdict = evaluator::evaluate(spec);
    for (auto& v : dsl::validate(spec)) out.verdict.violations.push_back(std::move(v));
    out.verdict.passed = out.verdict.violations.empty();
    return executor::AgentOutput{out, diagnostics};
  };
  return r;
}

namespace {

std::string summarize(const std::optional<DashboardSpec>& base, const DashboardSpec& spec,
                      const std::vector<Task>& tasks) {
  std::vector<std::string> parts;
  if (!has_views(base)) {
    parts.push_back("Created \"" + spec.title + "\" with " + std::to_string(spec.views.size()) + " views");
  } else {
    for (const auto& v : spec.views) {
      const auto* old = base->find_view(v.id);
      if (!old) {
        parts.push_back("Added " + std::string(enum_name(v.charts.front().chart_type)) + " view \"" + v.title + "\"");
        continue;
      }
      if (old->title != v.title) parts.push_back("Renamed " + v.id + " to \"" + v.title + "\"");
      if (old->charts.front().chart_type != v.charts.front().chart_type) {
        parts.push_back("Changed " + v.id + " to " + std::string(enum_name(v.charts.front().chart_type)));
      } else if (old->charts != v.charts) {
        parts.push_back("Updated data of " + v.id);
      }
    }
    for (const auto& v : base->views) {
      if (!spec.find_view(v.id)) parts.push_back("Removed view \"" + v.title + "\"");
    }
    if (base->title != spec.title) parts.push_back("Retitled dashboard to \"" + spec.title + "\"");
    for (const auto& t : tasks) {
      if (t.kind == TaskKind::ModifyLayout) parts.push_back("Applied layout " + t.payload["template"].get<std::string>());
    }
    if (std::none_of(tasks.begin(), tasks.end(), [](const Task& t) { return t.kind == TaskKind::ModifyLayout; }) &&
        base->layout != spec.layout && parts.empty()) {
      parts.push_back("Rearranged layout");
    }
    if (base->style.palette != spec.style.palette) parts.push_back("Palette set to " + spec.style.palette.name);
  }
  if (parts.empty()) parts.push_back("No visible change");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

void check_references(const std::optional<DashboardSpec>& base, const std::vector<Task>& tasks) {
  const bool creates = std::any_of(tasks.begin(), tasks.end(), [](const Task& t) { return t.kind == TaskKind::CreateViews; });
  for (const auto& t : tasks) {
    switch (t.kind) {
      case TaskKind::ModifyLayout:
        assembly::load_template(t.payload.at("template").get<std::string>());
        break;
      case TaskKind::ModifyStyle:
        if (t.payload.contains("palette")) {
          const auto names = stylization::preset_names();
          const auto name = t.payload["palette"].get<std::string>();
          if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw UnknownTemplate("unknown palette preset '" + name + "'");
          }
        }
        break;
      default: break;
    }
    const bool needs_base = t.kind != TaskKind::CreateViews && t.kind != TaskKind::Evaluate &&
                            t.kind != TaskKind::ArrangeLayout && t.kind != TaskKind::Stylize;
    if (needs_base && !has_views(base) && !creates) {
      throw NoCurrentSpec(std::string(enum_name(t.kind)) + " needs an existing prototype");
    }
  }
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineInput& input, const provider::Provider& provider,
                             const knowledge::KnowledgeBase* knowledge, const PipelineOptions& options) {
  const int triggers = input.utterance.has_value() + input.selection.has_value() + input.tasks.has_value();
  if (triggers != 1) throw InvariantViolation("pipeline needs exactly one of utterance, selection or tasks");
  if (options.iteration_budget < 1) throw InvariantViolation("iteration budget must be at least 1");

  std::vector<std::string> docs;
  if (knowledge && knowledge->size() > 0 && input.utterance) docs = knowledge->context_for(*input.utterance, options.knowledge_k);

  PipelineOutcome out;
  std::vector<Task> tasks;
  std::vector<Violation> last;
  for (int round = 1; round <= options.iteration_budget; ++round) {
    if (round == 1) {
      if (input.tasks) {
        tasks = *input.tasks;
      } else {
        planner::IntentRequest req;
        req.utterance = input.utterance;
        req.selection = input.selection;
        req.context = input.context;
        req.knowledge = docs;
        tasks = planner::extract_intent(req, provider);
      }
    } else {
      // Re-plan with the evaluator's findings; force the repairing agents.
      if (input.utterance) {
        std::string feedback = *input.utterance + "\n\nThe previous prototype failed evaluation:";
        for (const auto& v : last) feedback += "\n- " + v.rule + " at " + v.path + ": " + v.message;
        planner::IntentRequest req;
        req.utterance = feedback;
        req.context = input.context;
        req.knowledge = docs;
        tasks = planner::extract_intent(req, provider);
      }
      const bool layout = std::any_of(last.begin(), last.end(), [](const Violation& v) { return is_layout_rule(v.rule); });
      const bool style = std::any_of(last.begin(), last.end(), [](const Violation& v) { return v.rule == "palette-kind"; });
      std::erase_if(tasks, [&](const Task& t) {
        return t.kind == TaskKind::Evaluate || (layout && t.kind == TaskKind::ModifyLayout);
      });
      auto add = [&](TaskKind k) {
        if (std::any_of(tasks.begin(), tasks.end(), [&](const Task& t) { return t.kind == k; })) return;
        Task t;
        t.kind = k;
        tasks.push_back(std::move(t));
      };
      if (layout) add(TaskKind::ArrangeLayout);
      if (style) add(TaskKind::Stylize);
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        tasks[i].id = planner::task_id(i + 1);
        tasks[i].depends_on.clear();
      }
      out.diagnostics.push_back("round " + std::to_string(round) + ": re-planned after " + std::to_string(last.size()) +
                                " violation(s)");
    }

    check_references(input.current, tasks);
    const auto expanded = planner::expand_batch(tasks);
    const auto graph = planner::classify_dependencies(expanded);
    const auto plan = planner::schedule_waves(graph);

    // Keep each agent's exception so typed errors reach the caller.
    std::mutex errors_mu;
    std::map<std::string, std::exception_ptr> errors;
    auto registry = make_registry(input.current, provider, docs, options.seed);
    for (auto& [kind, agent] : registry) {
      agent = [inner = agent, &errors_mu, &errors](const executor::AgentContext& c) {
        try {
          return inner(c);
        } catch (...) {
          std::lock_guard lock(errors_mu);
          errors[c.task.id] = std::current_exception();
          throw;
        }
      };
    }
    executor::AgentMemory memory;
    const auto results = executor::execute_plan(plan, graph, registry, memory);
    if (!errors.empty()) std::rethrow_exception(errors.begin()->second);

    std::string evaluate_id;
    for (const auto& [id, t] : graph.tasks) {
      if (t.kind == TaskKind::Evaluate) evaluate_id = id;
    }
    const auto& evaluated = results.at(evaluate_id);
    if (!evaluated.ok()) {
      throw PipelineFailed("evaluation did not run", {{"pipeline", "tasks", evaluated.diagnostics.front()}});
    }
    for (const auto& [id, r] : results) {
      for (const auto& d : r.diagnostics) out.diagnostics.push_back(id + ": " + d);
    }
    const auto& assembled = evaluated.as<Assembled>();
    out.iterations = round;
    out.tasks = expanded;
    out.plan = plan;
    if (assembled.verdict.passed) {
      out.spec = assembled.spec;
      out.verdict = assembled.verdict;
      out.summary = summarize(input.current, out.spec, expanded);
      for (const auto& t : expanded) {
        if (t.kind != TaskKind::Evaluate) out.task_summaries.push_back(describe_task(t));
      }
      return out;
    }
    last = assembled.verdict.violations;
  }
  throw PipelineFailed("prototype failed evaluation after " + std::to_string(options.iteration_budget) + " round(s)",
                       last);
}

}  // namespace dashgen::service
