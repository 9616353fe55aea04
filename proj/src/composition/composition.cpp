#include "dashgen/composition/composition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "dashgen/common/json_schema.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"

namespace dashgen::composition {

using nlohmann::json;

namespace {

const json& simulation_config() { return resources::json("simulation.json"); }

std::vector<Violation> schema_check(const json& j, const std::string& definition, const std::string& root) {
  const auto& defs = resources::json("task_schemas.json").at("definitions");
  return schema::validate(j, {{"definitions", defs}, {"$ref", "#/definitions/" + definition}}, root);
}

std::string describe(const std::vector<Violation>& v) {
  std::string out;
  for (const auto& x : v) {
    if (!out.empty()) out += "; ";
    out += x.path + ": " + x.message;
  }
  return out;
}

std::vector<std::size_t> indices_of(const DisplayTask& t, FieldKind kind) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.fields.size(); ++i) {
    if (t.fields[i].kind == kind) out.push_back(i);
  }
  // A flagged field moves to the front.
  std::stable_partition(out.begin(), out.end(), [&](std::size_t i) { return t.fields[i].primary; });
  return out;
}

int count_of(const DisplayTask& t, FieldKind kind) {
  return static_cast<int>(std::count_if(t.fields.begin(), t.fields.end(),
                                        [&](const FieldRequirement& f) { return f.kind == kind; }));
}

bool has_geographic_dimension(const DisplayTask& t) {
  return std::any_of(t.fields.begin(), t.fields.end(), [](const FieldRequirement& f) {
    return f.kind == FieldKind::Dimension && is_geographic(f.name);
  });
}

int category_count(const DisplayTask& t) {
  return t.categories.value_or(simulation_config().at("default_categories").get<int>());
}

bool within(const json& range, int value) {
  if (range.contains("min") && value < range["min"].get<int>()) return false;
  if (range.contains("max") && value > range["max"].get<int>()) return false;
  return true;
}

bool rule_matches(const json& when, const DisplayTask& t) {
  for (const auto& [key, cond] : when.items()) {
    if (key == "part_of_whole") {
      if (t.part_of_whole != cond.get<bool>()) return false;
    } else if (key == "geographic") {
      if (has_geographic_dimension(t) != cond.get<bool>()) return false;
    } else if (key == "analysis_task") {
      const auto name = std::string(enum_name(t.analysis_task));
      if (std::find(cond.begin(), cond.end(), name) == cond.end()) return false;
    } else if (key == "measures") {
      if (!within(cond, count_of(t, FieldKind::Measure))) return false;
    } else if (key == "dimensions") {
      if (!within(cond, count_of(t, FieldKind::Dimension))) return false;
    } else if (key == "temporal") {
      if (!within(cond, count_of(t, FieldKind::Temporal))) return false;
    } else if (key == "fields") {
      if (!within(cond, static_cast<int>(t.fields.size()))) return false;
    } else if (key == "categories") {
      if (!within(cond, category_count(t))) return false;
    } else if (key == "primary_unit") {
      auto m = indices_of(t, FieldKind::Measure);
      if (m.empty() || t.fields[m[0]].unit.value_or("") != cond.get<std::string>()) return false;
    } else {
      throw InvariantViolation("unknown chart rule condition '" + key + "'");
    }
  }
  return true;
}

// --- dates -------------------------------------------------------------------

struct Step {
  int months = 0;
  int days = 1;
};

Step temporal_step(std::string_view field_name) {
  const auto lower = to_lower(field_name);
  for (const auto& s : simulation_config().at("temporal_steps")) {
    if (lower.find(s.at("contains").get<std::string>()) != std::string::npos) {
      Step st;
      st.months = s.value("months", 0);
      st.days = s.value("days", 0);
      return st;
    }
  }
  return {};
}

std::string date_at(std::size_t index, Step step) {
  using namespace std::chrono;
  const auto start_text = simulation_config().at("start_date").get<std::string>();
  int y = 0;
  unsigned m = 0, d = 0;
  std::sscanf(start_text.c_str(), "%d-%u-%u", &y, &m, &d);
  year_month_day start{year{y}, month{m}, day{d}};
  year_month_day out = start;
  if (step.months > 0) {
    out = start + months{static_cast<int>(index) * step.months};
  } else {
    out = year_month_day{sys_days{start} + days{static_cast<int>(index) * step.days}};
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(out.year()),
                static_cast<unsigned>(out.month()), static_cast<unsigned>(out.day()));
  return buf;
}

// --- measures -----------------------------------------------------------------

std::pair<double, double> magnitude(const FieldRequirement& f) {
  const auto& cfg = simulation_config();
  if (f.unit) {
    for (const auto& m : cfg.at("magnitudes")) {
      if (m.at("unit").get<std::string>() == *f.unit) {
        return {m["range"][0].get<double>(), m["range"][1].get<double>()};
      }
    }
  }
  return {cfg["default_magnitude"][0].get<double>(), cfg["default_magnitude"][1].get<double>()};
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// `count` values along a time or category axis.
std::vector<double> measure_series(MeasureShape shape, std::size_t count, double base, Rng& rng) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = static_cast<double>(i);
    switch (shape) {
      case MeasureShape::Trend:
        v[i] = base * (1.0 + 0.05 * x) + rng.uniform(-0.02, 0.02) * base;
        break;
      case MeasureShape::Seasonal:
        v[i] = base * (1.0 + 0.3 * std::sin(2.0 * 3.14159265358979323846 * x / 12.0)) +
               rng.uniform(-0.05, 0.05) * base;
        break;
      case MeasureShape::Uniform:
        v[i] = rng.uniform(0.2, 1.0) * base;
        break;
      case MeasureShape::Pareto:
        v[i] = base / std::pow(x + 1.0, 1.2) * rng.uniform(0.95, 1.05);
        break;
    }
  }
  if (shape == MeasureShape::Pareto) std::sort(v.begin(), v.end(), std::greater<>());
  for (auto& x : v) x = std::max(0.01, round2(x));
  return v;
}

/// Rescales to a total of 100 with two-decimal cells; the remainder lands on
/// the largest cell.
void normalize_shares(std::vector<double>& v) {
  double total = 0;
  for (double x : v) total += x;
  if (total <= 0 || v.empty()) return;
  double acc = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::max(0.01, round2(v[i] / total * 100.0));
    acc += v[i];
    if (v[i] > v[largest]) largest = i;
  }
  v[largest] = round2(v[largest] + (100.0 - acc));
}

// --- dimensions ---------------------------------------------------------------

std::vector<std::string> distinct_values(const std::vector<std::string>& pool, std::size_t n, Rng& rng) {
  auto shuffled = pool;
  rng.shuffle(shuffled);
  std::vector<std::string> out;
  for (std::size_t i = 0; out.size() < n; ++i) {
    const auto round = i / shuffled.size();
    const auto& base = shuffled[i % shuffled.size()];
    out.push_back(round == 0 ? base : base + " " + std::to_string(round + 1));
  }
  return out;
}

std::string singular(std::string s) {
  if (s.size() > 3 && s.compare(s.size() - 3, 3, "ies") == 0) return s.substr(0, s.size() - 3) + "y";
  if (s.size() > 1 && s.back() == 's') s.pop_back();
  return s;
}

const json* find_pool(const json& pools, const std::string& field_name) {
  const auto lower = to_lower(field_name);
  if (pools.contains(lower)) return &pools[lower];
  const auto tokens = tokenize(field_name);
  // Last token first: "product category" is a category.
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    for (const auto& candidate : {*it, singular(*it)}) {
      if (pools.contains(candidate)) return &pools[candidate];
    }
  }
  return nullptr;
}

}  // namespace

// --- DisplayTask I/O --------------------------------------------------------------

json to_json(const DisplayTask& t) {
  json fields = json::array();
  for (const auto& f : t.fields) {
    json jf = {{"name", f.name}, {"kind", std::string(enum_name(f.kind))}};
    if (f.unit) jf["unit"] = *f.unit;
    if (f.primary) jf["primary"] = true;
    fields.push_back(std::move(jf));
  }
  json j = {{"title", t.title}, {"analysis_task", std::string(enum_name(t.analysis_task))}, {"fields", fields}};
  if (t.emphasis) j["emphasis"] = true;
  if (t.part_of_whole) j["part_of_whole"] = true;
  if (t.categories) j["categories"] = *t.categories;
  if (t.preferred_chart) j["chart_type"] = std::string(enum_name(*t.preferred_chart));
  return j;
}

DisplayTask display_task_from_json(const json& j) {
  if (auto v = schema_check(j, "display_task", ""); !v.empty()) throw ValidationError(std::move(v));
  DisplayTask t;
  t.title = j["title"].get<std::string>();
  t.analysis_task = *enum_from<AnalysisTask>(j["analysis_task"].get<std::string>());
  for (const auto& jf : j["fields"]) {
    FieldRequirement f;
    f.name = jf["name"].get<std::string>();
    f.kind = *enum_from<FieldKind>(jf["kind"].get<std::string>());
    if (jf.contains("unit")) f.unit = jf["unit"].get<std::string>();
    f.primary = jf.value("primary", false);
    t.fields.push_back(std::move(f));
  }
  t.emphasis = j.value("emphasis", false);
  t.part_of_whole = j.value("part_of_whole", false);
  if (j.contains("categories")) t.categories = j["categories"].get<int>();
  if (j.contains("chart_type")) t.preferred_chart = enum_from<ChartType>(j["chart_type"].get<std::string>());
  if (auto v = validate_display_task(t); !v.empty()) throw ValidationError(std::move(v));
  return t;
}

std::vector<Violation> validate_display_task(const DisplayTask& t) {
  auto v = schema_check(to_json(t), "display_task", "");
  std::set<std::string> names;
  int primary_temporal = 0;
  for (std::size_t i = 0; i < t.fields.size(); ++i) {
    const auto path = "fields[" + std::to_string(i) + "]";
    if (!names.insert(t.fields[i].name).second) {
      v.push_back({"display-task", path + ".name", "duplicate field '" + t.fields[i].name + "'"});
    }
    if (t.fields[i].kind == FieldKind::Temporal && t.fields[i].primary) ++primary_temporal;
  }
  if (primary_temporal > 1) v.push_back({"display-task", "fields", "more than one primary temporal field"});
  if (t.preferred_chart == ChartType::SciVis) {
    v.push_back({"display-task", "chart_type", "SciVis is never generated"});
  }
  return v;
}

// --- decompose ----------------------------------------------------------------------

namespace {

constexpr const char* kDecomposeInstructions =
    "Split the dashboard request into display tasks. Answer with JSON only: "
    "{\"title\": text, \"domain\": tag, \"display_tasks\": [{\"title\", \"analysis_task\": "
    "<Comparison|Highlight|Overview|Decomposition>, \"fields\": [{\"name\", \"kind\": "
    "<dimension|measure|temporal>, \"unit\"?, \"primary\"?}], \"emphasis\"?, \"part_of_whole\"?, "
    "\"categories\"?}]}. At most 12 tasks.";

std::string infer_domain(const std::string& text) {
  const auto tokens = tokenize(text);
  std::string best = "generic";
  int best_hits = 0;
  for (const auto& [domain, words] : simulation_config().at("domain_keywords").items()) {
    int hits = 0;
    for (const auto& w : words) {
      hits += static_cast<int>(std::count(tokens.begin(), tokens.end(), w.get<std::string>()));
    }
    if (hits > best_hits) {
      best = domain;
      best_hits = hits;
    }
  }
  return best;
}

std::string title_from_request(const std::string& request) {
  auto title = request.substr(0, request.find_first_of(".\n"));
  if (title.size() > 60) {
    title = title.substr(0, 60);
    if (auto sp = title.rfind(' '); sp != std::string::npos && sp > 20) title = title.substr(0, sp);
  }
  if (!title.empty() && title[0] >= 'a' && title[0] <= 'z') title[0] = static_cast<char>(title[0] - 'a' + 'A');
  return title.empty() ? "Dashboard" : title;
}

std::vector<DisplayTask> tasks_from_array(const json& arr, const std::string& root) {
  std::vector<DisplayTask> out;
  std::vector<Violation> all;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      out.push_back(display_task_from_json(arr[i]));
    } catch (const ValidationError& e) {
      for (auto v : e.violations()) {
        v.path = root + "[" + std::to_string(i) + "]" + (v.path.empty() ? "" : "." + v.path);
        all.push_back(std::move(v));
      }
    }
  }
  if (!all.empty()) throw ValidationError(std::move(all));
  return out;
}

}  // namespace

Decomposition decompose(const json& payload, const provider::Provider& provider,
                        const std::vector<std::string>& knowledge) {
  Decomposition out;
  if (payload.is_null() || (payload.is_object() && payload.empty())) return out;
  const auto request = payload.value("request", std::string());
  out.title = payload.value("title", std::string());
  out.domain = payload.value("domain", std::string());

  if (payload.contains("views")) {
    try {
      out.tasks = tasks_from_array(payload["views"], "views");
    } catch (const ValidationError& e) {
      throw UnparsableIntent("view sketch invalid: " + describe(e.violations()));
    }
  } else if (!request.empty()) {
    provider::Prompt prompt{"decompose", kDecomposeInstructions, request, knowledge};
    std::string last_error;
    bool done = false;
    for (int attempt = 1; attempt <= 2 && !done; ++attempt) {
      try {
        json j;
        try {
          j = json::parse(strip_code_fence(provider.complete(prompt)));
        } catch (const json::parse_error& e) {
          throw ValidationError({{"schema", "$", std::string("answer is not JSON: ") + e.what()}});
        }
        if (auto v = schema_check(j, "decompose_response", "$"); !v.empty()) throw ValidationError(std::move(v));
        out.tasks = tasks_from_array(j["display_tasks"], "display_tasks");
        if (out.title.empty()) out.title = j.value("title", std::string());
        if (out.domain.empty()) out.domain = j.value("domain", std::string());
        done = true;
      } catch (const ValidationError& e) {
        last_error = describe(e.violations());
        prompt.user = request + "\n\nYour previous answer was rejected: " + last_error +
                      "\nAnswer again with valid JSON.";
      }
    }
    if (!done) throw UnparsableIntent("decomposition failed validation twice: " + last_error);
  }

  const auto max_views = simulation_config().at("max_views").get<std::size_t>();
  if (out.tasks.size() > max_views) {
    out.diagnostics.push_back("requested " + std::to_string(out.tasks.size()) + " views; kept the first " +
                              std::to_string(max_views));
    out.tasks.resize(max_views);
  }
  if (out.title.empty()) out.title = title_from_request(request);
  if (out.domain.empty()) out.domain = infer_domain(request + " " + out.title);
  return out;
}

// --- chart selection ------------------------------------------------------------------

bool is_geographic(std::string_view field_name) {
  const auto tokens = tokenize(field_name);
  for (const auto& term : simulation_config().at("geographic_terms")) {
    if (std::find(tokens.begin(), tokens.end(), term.get<std::string>()) != tokens.end()) return true;
  }
  return false;
}

ChartChoice choose_chart(const DisplayTask& task) {
  if (task.preferred_chart && *task.preferred_chart != ChartType::SciVis) {
    return {*task.preferred_chart, "preferred", std::nullopt};
  }
  const auto& table = resources::json("chart_rules.json");
  for (const auto& rule : table.at("rules")) {
    if (rule_matches(rule.at("when"), task)) {
      return {*enum_from<ChartType>(rule.at("chart").get<std::string>()), rule.at("id").get<std::string>(),
              std::nullopt};
    }
  }
  return {*enum_from<ChartType>(table.at("fallback").get<std::string>()), "fallback",
          "no chart rule applies to '" + task.title + "'; using Bar"};
}

ChartType select_chart_type(const DisplayTask& task) { return choose_chart(task).chart; }

std::pair<int, int> row_bounds(ChartType chart) {
  const auto& b = simulation_config().at("row_bounds").at(std::string(enum_name(chart)));
  return {b[0].get<int>(), b[1].get<int>()};
}

std::vector<std::string> vocabulary_pool(std::string_view domain, std::string_view field_name) {
  const std::string name(field_name);
  const auto domain_file = "vocab/" + std::string(domain) + ".json";
  if (resources::exists(domain_file)) {
    if (const auto* p = find_pool(resources::json(domain_file).at("pools"), name)) {
      return p->get<std::vector<std::string>>();
    }
  }
  const auto& generic = resources::json("vocab/generic.json").at("pools");
  if (const auto* p = find_pool(generic, name)) return p->get<std::vector<std::string>>();
  if (is_geographic(name)) return generic.at("region").get<std::vector<std::string>>();
  return generic.at("item").get<std::vector<std::string>>();
}

MeasureShape default_shape(const DisplayTask& task, std::size_t measure_index) {
  if (count_of(task, FieldKind::Temporal) > 0) {
    return measure_index == 0 ? MeasureShape::Trend : MeasureShape::Seasonal;
  }
  if (task.part_of_whole || task.analysis_task == AnalysisTask::Decomposition) return MeasureShape::Pareto;
  return MeasureShape::Uniform;
}

// --- simulation ----------------------------------------------------------------------

SimulatedDataset simulate_data(const DisplayTask& task, ChartType chart, const SimulationProfile& profile) {
  Rng rng(mix_seed(profile.seed, std::string(enum_name(chart)) + "\x1f" + to_json(task).dump()));
  const auto [lo, hi] = row_bounds(chart);
  const auto temporal = indices_of(task, FieldKind::Temporal);
  const auto dims = indices_of(task, FieldKind::Dimension);
  const auto measures = indices_of(task, FieldKind::Measure);
  const std::string domain = profile.domain.empty() ? "generic" : profile.domain;

  SimulatedDataset ds;
  for (const auto& f : task.fields) ds.fields.push_back({f.name, f.kind, f.unit});

  auto clamp_rows = [lo = lo, hi = hi](int n) { return std::clamp(n, lo, hi); };
  const bool series_chart = (chart == ChartType::Line || chart == ChartType::Area) && !temporal.empty();
  const bool grid_chart = chart == ChartType::Matrix && dims.size() + temporal.size() >= 2;

  // Row layout: `axis` positions (time steps or categories) times `series`.
  std::size_t axis = 1, series = 1;
  if (grid_chart) {
    axis = static_cast<std::size_t>(clamp_rows(task.categories.value_or(rng.between(lo, hi))));
    series = static_cast<std::size_t>(rng.between(lo, hi));
  } else if (!temporal.empty()) {
    axis = static_cast<std::size_t>(clamp_rows(task.categories.value_or(rng.between(lo, hi))));
    if (series_chart && !dims.empty()) series = static_cast<std::size_t>(rng.between(2, 3));
  } else if (!dims.empty() && lo != hi) {
    axis = static_cast<std::size_t>(clamp_rows(category_count(task)));
  } else {
    axis = static_cast<std::size_t>(rng.between(lo, hi));
  }
  const std::size_t n = axis * series;
  ds.rows.assign(n, std::vector<Cell>(task.fields.size()));

  // Position of each row on the axis and within its series.
  auto axis_of = [&](std::size_t r) { return r / series; };
  auto series_of = [&](std::size_t r) { return r % series; };

  std::optional<std::size_t> time_field = temporal.empty() ? std::nullopt : std::optional(temporal[0]);
  for (std::size_t ti : temporal) {
    const auto step = temporal_step(task.fields[ti].name);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t idx = grid_chart && dims.size() >= 1 ? series_of(r) : axis_of(r);
      ds.rows[r][ti] = date_at(idx, step);
    }
  }

  for (std::size_t k = 0; k < dims.size(); ++k) {
    const auto di = dims[k];
    const auto pool = vocabulary_pool(domain, task.fields[di].name);
    if (grid_chart && k < 2 && (k == 0 || temporal.empty())) {
      const auto values = distinct_values(pool, k == 0 ? axis : series, rng);
      for (std::size_t r = 0; r < n; ++r) ds.rows[r][di] = values[k == 0 ? axis_of(r) : series_of(r)];
    } else if (k == 0 && temporal.empty()) {
      const auto values = distinct_values(pool, n, rng);
      for (std::size_t r = 0; r < n; ++r) ds.rows[r][di] = values[r];
    } else if (k == 0 && series > 1) {
      const auto values = distinct_values(pool, series, rng);
      for (std::size_t r = 0; r < n; ++r) ds.rows[r][di] = values[series_of(r)];
    } else if (chart == ChartType::Diagram && k == 1) {
      for (std::size_t r = 0; r < n; ++r) {
        const auto& source = std::get<std::string>(ds.rows[r][dims[0]]);
        std::string pick;
        do {
          pick = pool[rng.below(pool.size())];
        } while (pick == source && pool.size() > 1);
        ds.rows[r][di] = pick;
      }
    } else {
      for (std::size_t r = 0; r < n; ++r) ds.rows[r][di] = pool[rng.below(pool.size())];
    }
  }

  for (std::size_t m = 0; m < measures.size(); ++m) {
    const auto mi = measures[m];
    const auto& field = task.fields[mi];
    const auto [mlo, mhi] = magnitude(field);
    auto shape = profile.shape.value_or(default_shape(task, m));
    if (grid_chart) shape = MeasureShape::Uniform;
    for (std::size_t s = 0; s < series; ++s) {
      const double base = rng.uniform(mlo, mhi);
      auto values = measure_series(shape, axis, base, rng);
      for (std::size_t a = 0; a < axis; ++a) ds.rows[a * series + s][mi] = values[a];
    }
    const bool shares = task.part_of_whole && field.unit == "%" && !time_field && !grid_chart;
    if (shares) {
      std::vector<double> col(n);
      for (std::size_t r = 0; r < n; ++r) col[r] = std::get<double>(ds.rows[r][mi]);
      normalize_shares(col);
      for (std::size_t r = 0; r < n; ++r) ds.rows[r][mi] = col[r];
    }
  }
  return ds;
}

// --- encodings -------------------------------------------------------------------

ChartSpec map_encodings(const DisplayTask& task, ChartType chart, const SimulatedDataset& dataset) {
  for (const auto& f : task.fields) {
    if (!dataset.field(f.name)) throw EncodingImpossible("dataset lacks field '" + f.name + "'");
  }
  auto names = [&](FieldKind k) {
    std::vector<std::string> out;
    for (auto i : indices_of(task, k)) out.push_back(task.fields[i].name);
    return out;
  };
  const auto T = names(FieldKind::Temporal);
  const auto D = names(FieldKind::Dimension);
  const auto M = names(FieldKind::Measure);
  const auto chart_name = std::string(enum_name(chart));
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw EncodingImpossible(chart_name + " chart needs " + what + " ('" + task.title + "')");
  };

  ChartSpec c;
  c.chart_type = chart;
  c.dataset = dataset;
  auto& e = c.encoding;
  switch (chart) {
    case ChartType::Line:
    case ChartType::Area:
      need(!M.empty() && (!T.empty() || !D.empty()), "a measure over time or categories");
      e[Channel::X] = T.empty() ? D[0] : T[0];
      e[Channel::Y] = M[0];
      if (!T.empty() && !D.empty()) e[Channel::Color] = D[0];
      break;
    case ChartType::Bar:
      need(!M.empty() && (!D.empty() || !T.empty()), "a measure and a category or time axis");
      e[Channel::X] = D.empty() ? T[0] : D[0];
      e[Channel::Y] = M[0];
      if (!D.empty()) e[Channel::Color] = D[0];
      break;
    case ChartType::Circle:
    case ChartType::Pie:
      need(!M.empty() && !D.empty(), "a dimension and a measure");
      e[Channel::Label] = D[0];
      e[Channel::Value] = M[0];
      e[Channel::Color] = D[0];
      break;
    case ChartType::Point:
      if (M.size() >= 2) {
        e[Channel::X] = M[0];
        e[Channel::Y] = M[1];
        if (M.size() >= 3) e[Channel::Size] = M[2];
        if (!D.empty()) e[Channel::Color] = D[0];
      } else {
        need(M.size() == 1 && (!T.empty() || !D.empty()), "two measures or a measure with an axis");
        e[Channel::X] = T.empty() ? D[0] : T[0];
        e[Channel::Y] = M[0];
      }
      break;
    case ChartType::Map: {
      std::optional<std::string> geo;
      for (const auto& d : D) {
        if (is_geographic(d)) {
          geo = d;
          break;
        }
      }
      need(geo.has_value(), "a geographic dimension");
      need(!M.empty(), "a measure");
      e[Channel::Label] = *geo;
      e[Channel::Value] = M[0];
      e[Channel::Color] = M[0];
      break;
    }
    case ChartType::Matrix: {
      std::vector<std::string> axes = D;
      axes.insert(axes.end(), T.begin(), T.end());
      need(axes.size() >= 2 && !M.empty(), "two axes and a measure");
      e[Channel::X] = axes[0];
      e[Channel::Y] = axes[1];
      e[Channel::Color] = M[0];
      e[Channel::Value] = M[0];
      break;
    }
    case ChartType::Table:
      if (!D.empty() || !T.empty()) e[Channel::Label] = D.empty() ? T[0] : D[0];
      if (!M.empty()) e[Channel::Value] = M[0];
      break;
    case ChartType::Text:
    case ChartType::Glyph:
      need(!M.empty(), "a measure");
      e[Channel::Value] = M[0];
      break;
    case ChartType::Diagram:
      need(!D.empty(), "a dimension");
      e[Channel::X] = D[0];
      if (D.size() >= 2) e[Channel::Y] = D[1];
      if (!M.empty()) e[Channel::Size] = M[0];
      break;
    case ChartType::SciVis:
      throw EncodingImpossible("SciVis is never generated");
  }
  return c;
}

// --- views -------------------------------------------------------------------------

namespace {

DisplayTask restrict_fields(const DisplayTask& t, const std::function<bool(const FieldRequirement&)>& keep) {
  DisplayTask out = t;
  out.fields.clear();
  for (const auto& f : t.fields) {
    if (keep(f)) out.fields.push_back(f);
  }
  return out;
}

SimulatedDataset project(const SimulatedDataset& ds, const DisplayTask& t) {
  SimulatedDataset out;
  std::vector<std::size_t> cols;
  for (const auto& f : t.fields) {
    auto idx = *ds.field_index(f.name);
    cols.push_back(idx);
    out.fields.push_back(ds.fields[idx]);
  }
  for (const auto& row : ds.rows) {
    std::vector<Cell> r;
    for (auto c : cols) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

bool supports_measure_split(ChartType c) {
  return c == ChartType::Bar || c == ChartType::Line || c == ChartType::Area || c == ChartType::Circle ||
         c == ChartType::Pie || c == ChartType::Glyph || c == ChartType::Text;
}

}  // namespace

std::vector<ChartSpec> compose_charts(const DisplayTask& task, const SimulationProfile& profile) {
  const auto primary = select_chart_type(task);
  const auto measures = indices_of(task, FieldKind::Measure);
  const auto dims = indices_of(task, FieldKind::Dimension);
  const bool has_time = count_of(task, FieldKind::Temporal) > 0;
  const auto max_charts = simulation_config().at("max_small_multiple_charts").get<std::size_t>();

  if (task.analysis_task == AnalysisTask::Comparison && measures.size() >= 2 && supports_measure_split(primary)) {
    const auto ds = simulate_data(task, primary, profile);
    std::vector<ChartSpec> charts;
    for (std::size_t m = 0; m < measures.size() && charts.size() < max_charts; ++m) {
      const auto& keep_name = task.fields[measures[m]].name;
      auto sub = restrict_fields(task, [&](const FieldRequirement& f) {
        return f.kind != FieldKind::Measure || f.name == keep_name;
      });
      charts.push_back(map_encodings(sub, primary, project(ds, sub)));
    }
    return charts;
  }

  if (task.analysis_task == AnalysisTask::Highlight && has_time && !measures.empty() &&
      (primary == ChartType::Text || primary == ChartType::Glyph)) {
    const auto& headline = task.fields[measures[0]];
    auto context_task = restrict_fields(task, [&](const FieldRequirement& f) {
      return f.kind == FieldKind::Temporal || f.name == headline.name;
    });
    auto context = map_encodings(context_task, ChartType::Line, simulate_data(context_task, ChartType::Line, profile));
    auto value_task = restrict_fields(task, [&](const FieldRequirement& f) { return f.name == headline.name; });
    SimulatedDataset value;
    value.fields = {{headline.name, FieldKind::Measure, headline.unit}};
    const auto col = *context.dataset.field_index(headline.name);
    value.rows = {{context.dataset.rows.back()[col]}};
    return {map_encodings(value_task, primary, value), std::move(context)};
  }

  auto main_chart = map_encodings(task, primary, simulate_data(task, primary, profile));
  if (task.analysis_task == AnalysisTask::Decomposition && !dims.empty() && !measures.empty()) {
    const auto detail_type = primary == ChartType::Bar ? ChartType::Pie : ChartType::Bar;
    const auto& dim = task.fields[dims[0]].name;
    const auto& measure = task.fields[measures[0]].name;
    auto detail_task = restrict_fields(task, [&](const FieldRequirement& f) { return f.name == dim || f.name == measure; });
    detail_task.title = task.title + " (detail)";
    detail_task.categories.reset();
    auto detail = map_encodings(detail_task, detail_type, simulate_data(detail_task, detail_type, profile));
    return {std::move(main_chart), std::move(detail)};
  }
  return {std::move(main_chart)};
}

double view_importance(const DisplayTask& task, std::size_t chart_count) {
  double w = task.emphasis ? 2.0 : 1.0;
  if (task.analysis_task == AnalysisTask::Overview) w += 0.5;
  if (chart_count > 1) w += 0.5 * static_cast<double>(chart_count - 1);
  return w;
}

ViewSpec compose_view(const DisplayTask& task, std::string id, const SimulationProfile& profile) {
  ViewSpec v;
  v.id = std::move(id);
  v.title = task.title;
  v.analysis_task = task.analysis_task;
  v.charts = compose_charts(task, profile);
  v.importance = view_importance(task, v.charts.size());
  return v;
}

}  // namespace dashgen::composition
