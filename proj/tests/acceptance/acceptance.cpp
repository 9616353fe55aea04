// Runs every primary acceptance criterion once and prints one PASS/FAIL
// line per criterion. Exit status is the number of failures.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "dashgen/assembly/assembly.hpp"
#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/composition/composition.hpp"
#include "dashgen/dsl/dsl.hpp"
#include "dashgen/evaluator/evaluator.hpp"
#include "dashgen/executor/executor.hpp"
#include "dashgen/knowledge/knowledge.hpp"
#include "dashgen/planner/planner.hpp"
#include "dashgen/renderer/renderer.hpp"
#include "dashgen/service/pipeline.hpp"
#include "dashgen/service/service.hpp"
#include "dashgen/stylization/stylization.hpp"
#include "support/color_oracle.hpp"
#include "support/fixtures.hpp"
#include "support/random_tasks.hpp"
#include "support/seeded_violations.hpp"

using namespace dashgen;
using nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

/// Collects the first few failure messages of a criterion.
struct Tally {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::vector<std::string> notes;

  void expect(bool cond, const std::string& what) {
    ++checked;
    if (cond) return;
    ++failed;
    if (notes.size() < 3) notes.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    std::string d = summary + ", " + std::to_string(failed) + " failures";
    for (const auto& n : notes) d += "; " + n;
    return {failed == 0, d};
  }
};

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

planner::Task task(std::string id, TaskKind kind, std::set<std::string> deps = {}) {
  planner::Task t;
  t.id = std::move(id);
  t.kind = kind;
  t.depends_on = std::move(deps);
  return t;
}

std::shared_ptr<provider::Provider> bundled_mock() {
  return provider::Provider::mock(provider::MockFixture::load("bundled"));
}

// --- DAG fidelity -----------------------------------------------------------------------

Outcome dag_fidelity() {
  const std::vector<planner::Task> batch = {task("M", TaskKind::CreateViews), task("S", TaskKind::Stylize),
                                            task("A", TaskKind::ArrangeLayout), task("C", TaskKind::ModifyStyle)};
  const auto t0 = Clock::now();
  const auto plan = planner::schedule_waves(planner::classify_dependencies(batch));
  const double ms = ms_since(t0);
  const std::vector<std::vector<std::string>> want = {{"C", "M"}, {"A", "S"}};
  return {plan.waves == want && ms < 1.0, "waves " + planner::to_json(plan)["waves"].dump() + " in " + fmt(ms) + " ms"};
}

// --- scheduler oracle ---------------------------------------------------------------------

// Layer = number of edges on the longest path from any source.
std::map<std::string, std::size_t> source_distance(const planner::TaskGraph& g) {
  std::map<std::string, std::size_t> memo;
  std::function<std::size_t(const std::string&)> depth = [&](const std::string& id) -> std::size_t {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    std::size_t best = 0;
    for (const auto& d : g.tasks.at(id).depends_on) best = std::max(best, depth(d) + 1);
    return memo[id] = best;
  };
  for (const auto& [id, t] : g.tasks) depth(id);
  return memo;
}

Outcome scheduler_oracle() {
  Rng rng(1000);
  Tally tally;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.between(1, 12);
    std::vector<std::string> order;
    for (int i = 0; i < n; ++i) order.push_back("t" + std::to_string(i));
    rng.shuffle(order);
    const double p = rng.uniform(0.0, 0.7);
    std::vector<planner::Task> tasks;
    for (int i = 0; i < n; ++i) {
      auto t = task(order[static_cast<std::size_t>(i)], TaskKind::ModifyStyle);
      for (int j = 0; j < i; ++j)
        if (rng.chance(p)) t.depends_on.insert(order[static_cast<std::size_t>(j)]);
      tasks.push_back(t);
    }
    const auto g = planner::classify_dependencies(tasks);
    const auto plan = planner::schedule_waves(g);
    std::vector<std::vector<std::string>> want;
    for (const auto& [id, layer] : source_distance(g)) {
      if (want.size() <= layer) want.resize(layer + 1);
      want[layer].push_back(id);
    }
    for (auto& w : want) std::sort(w.begin(), w.end());
    tally.expect(plan.waves == want, "trial " + std::to_string(trial));
  }
  return tally.outcome("1000 DAGs");
}

// --- layout invariants --------------------------------------------------------------------

double node_weight(const LayoutNode& n, const std::map<std::string, double>& w) {
  if (n.is_leaf()) return w.at(n.view_id);
  double s = 0;
  for (const auto& c : n.children) s += node_weight(c, w);
  return s;
}

double overlap(const assembly::Rect& a, const assembly::Rect& b) {
  const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0;
}

Outcome layout_invariants() {
  const auto t0 = Clock::now();
  Rng rng(851);
  const std::array<ScreenSize, 3> screens{ScreenSize{1920, 1080}, ScreenSize{2560, 1440}, ScreenSize{1080, 1920}};
  Tally tally;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(1, 12));
    std::vector<ViewSpec> views;
    std::map<std::string, double> w;
    for (std::size_t i = 0; i < n; ++i) {
      ViewSpec v;
      v.id = "v" + std::to_string(i + 1);
      v.title = v.id;
      v.analysis_task = enum_values<AnalysisTask>()[static_cast<std::size_t>(rng.below(4))];
      v.importance = rng.chance(0.25) ? 1.0 : rng.uniform(0.05, 8.0);
      v.charts.push_back(ChartSpec{});
      w[v.id] = v.importance;
      views.push_back(v);
    }
    const auto screen = screens[static_cast<std::size_t>(trial) % screens.size()];
    const auto tree = assembly::build_layout_tree(views, std::nullopt, screen);
    const auto& root = tree.root;
    const auto tag = "trial " + std::to_string(trial);

    tally.expect(assembly::tree_depth(root) <= 2, tag + ": depth");
    tally.expect(!root.children.empty() && root.children.size() <= 4, tag + ": level-1 count");
    const double total = node_weight(root, w);
    for (const auto& c : root.children) {
      tally.expect(std::abs(c.fraction - node_weight(c, w) / total) <= 1e-9, tag + ": level-1 fraction");
      if (c.is_leaf()) continue;
      tally.expect(c.orientation && root.orientation && *c.orientation != *root.orientation, tag + ": orthogonality");
      const double inner = node_weight(c, w);
      for (const auto& g : c.children) {
        tally.expect(g.is_leaf(), tag + ": depth");
        if (g.is_leaf()) tally.expect(std::abs(g.fraction - w.at(g.view_id) / inner) <= 1e-9, tag + ": level-2 fraction");
      }
    }
    std::set<std::string> placed_ids;
    const assembly::Rect full{0, 0, double(screen.width), double(screen.height)};
    for (int snapped = 0; snapped < 2; ++snapped) {
      const auto placed = snapped ? assembly::realize_snapped(tree, full) : assembly::realize(tree, full);
      const std::string kind = snapped ? " (snapped)" : " (exact)";
      double area = 0;
      for (std::size_t i = 0; i < placed.size(); ++i) {
        const auto& r = placed[i].rect;
        placed_ids.insert(placed[i].view_id);
        tally.expect(r.w > 0 && r.h > 0 && r.x >= -1e-9 && r.y >= -1e-9 && r.x + r.w <= full.w + 1e-9 &&
                         r.y + r.h <= full.h + 1e-9,
                     tag + ": rect outside screen");
        area += r.area();
        for (std::size_t j = i + 1; j < placed.size(); ++j) {
          // Pixel tiling must be exact; the float geometry only carries rounding.
          const double o = overlap(r, placed[j].rect);
          tally.expect(snapped ? o == 0 : o <= 1e-9 * full.area(), tag + kind + ": overlap " + fmt(o));
        }
      }
      tally.expect(std::abs(area - full.area()) <= 1e-9 * full.area(), tag + ": union != screen");
    }
    tally.expect(placed_ids.size() == n, tag + ": every view placed");
  }
  const double ms = ms_since(t0);
  tally.expect(ms < 5000, "suite took " + fmt(ms) + " ms");
  return tally.outcome("1000 view sets in " + fmt(ms) + " ms");
}

// --- overlap model --------------------------------------------------------------------------

Outcome overlap_model() {
  Tally tally;
  const assembly::ReferenceGrid g2{2, 2, {1920, 1080}};
  tally.expect(assembly::compute_overlap_profile({0, 0, 960, 1080}, g2).p == std::vector<double>{1, 0, 1, 0}, "half");
  tally.expect(assembly::compute_overlap_profile({0, 0, 960, 540}, g2).p == std::vector<double>{1, 0, 0, 0}, "quarter");
  tally.expect(assembly::compute_overlap_profile({480, 270, 960, 540}, g2).p == std::vector<double>{0.25, 0.25, 0.25, 0.25},
               "centered quarter");
  tally.expect(assembly::compute_overlap_profile({0, 0, 1920, 1080}, g2).p == std::vector<double>{1, 1, 1, 1}, "full");

  Rng rng(852);
  for (int trial = 0; trial < 200; ++trial) {
    const int cols = rng.between(1, 12), rows = rng.between(1, 12);
    const assembly::ReferenceGrid grid{cols, rows, {1920, 1080}};
    const double x0 = rng.uniform(0, 1900), y0 = rng.uniform(0, 1060);
    const assembly::Rect r{x0, y0, rng.uniform(1e-3, 1920 - x0), rng.uniform(1e-3, 1080 - y0)};
    const auto prof = assembly::compute_overlap_profile(r, grid);
    const double cell = (1920.0 / cols) * (1080.0 / rows);
    double covered = 0;
    for (double p : prof.p) covered += p * cell;
    tally.expect(std::abs(covered - r.area()) <= 1e-6 * r.area(),
                 "trial " + std::to_string(trial) + ": " + fmt(covered) + " vs " + fmt(r.area()));
  }
  return tally.outcome("4 fixtures + 200 rectangles");
}

// --- generated specs -------------------------------------------------------------------------

DashboardSpec generated_spec(std::uint64_t seed, const provider::Provider& mock) {
  static const std::vector<std::string> domains = {"retail", "tobacco", "health", "generic", "energy", "logistics"};
  Rng rng(mix_seed(seed, "acceptance"));
  DashboardSpec spec;
  spec.domain = domains[seed % domains.size()];
  spec.title = "Dashboard " + std::to_string(seed);
  const int n = rng.between(1, 12);
  for (int i = 0; i < n; ++i) {
    const auto t = test::random_display_task(rng, "View " + std::to_string(i + 1));
    spec.views.push_back(composition::compose_view(t, "v" + std::to_string(i + 1), {seed, spec.domain, std::nullopt}));
  }
  spec.layout = assembly::build_layout_tree(spec.views);
  stylization::StyleRequest req;
  req.domain = spec.domain;
  req.seed = seed;
  spec.style = stylization::stylize(spec.views, req, mock).style;
  return spec;
}

Outcome dsl_round_trip() {
  auto mock = bundled_mock();
  Tally tally;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = generated_spec(seed, *mock);
    const auto once = dsl::serialize_spec(spec);
    const auto back = dsl::parse_spec(once);
    tally.expect(back == spec, "seed " + std::to_string(seed) + ": parse(serialize) differs");
    tally.expect(dsl::serialize_spec(back) == once, "seed " + std::to_string(seed) + ": bytes differ");
  }
  const auto seeded = test::dsl_seeded_violations(json::parse(test::read_fixture("minimal.dash.json")));
  tally.expect(seeded.size() == dsl::semantic_rules().size() && seeded.size() == 9, "nine seeded violations");
  for (const auto& [rule, doc] : seeded) {
    std::string got = "<accepted>";
    try {
      dsl::parse_spec(doc.dump());
    } catch (const ValidationError& e) {
      got = e.rule();
    }
    tally.expect(got == rule, rule + " reported as " + got);
  }
  return tally.outcome("50 specs + " + std::to_string(seeded.size()) + " seeded violations");
}

// --- evaluator closure ---------------------------------------------------------------------

Outcome evaluator_closure() {
  auto mock = bundled_mock();
  const std::array<std::string, 3> prompts = {"Build a dashboard to monitor the tobacco supply chain",
                                              "An e-commerce sales dashboard", "Show me plant operations"};
  Tally tally;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    service::PipelineInput in;
    if (seed % 5 == 0) {
      in.utterance = prompts[(seed / 5) % prompts.size()];
    } else {
      Rng rng(mix_seed(seed, "closure"));
      json views = json::array();
      const int n = rng.between(1, 12);
      for (int i = 0; i < n; ++i) views.push_back(composition::to_json(test::random_display_task(rng, "View " + std::to_string(i + 1))));
      in.tasks = std::vector<planner::Task>{task("t01", TaskKind::CreateViews)};
      (*in.tasks)[0].payload = {{"request", "generated dashboard " + std::to_string(seed)}, {"views", views}};
    }
    service::PipelineOptions opt;
    opt.seed = seed;
    try {
      const auto out = service::run_pipeline(in, *mock, nullptr, opt);
      const auto verdict = evaluator::evaluate(out.spec);
      tally.expect(verdict.passed && dsl::validate(out.spec).empty(),
                   "seed " + std::to_string(seed) + ": " + evaluator::to_json(verdict).dump());
    } catch (const std::exception& e) {
      tally.expect(false, "seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  const auto golden = dsl::parse_spec(test::read_fixture("golden_3view.dash.json"));
  const auto seeded = test::evaluator_seeded_violations();
  tally.expect(seeded.size() == evaluator::rules().size() && seeded.size() == 9, "nine evaluator fixtures");
  for (const auto& [rule, mutate] : seeded) {
    auto spec = golden;
    mutate(spec);
    const auto v = evaluator::evaluate(spec);
    const bool named = std::any_of(v.violations.begin(), v.violations.end(), [&](const Violation& x) { return x.rule == rule; });
    tally.expect(!v.passed && named, rule + " not reported");
  }
  return tally.outcome("500 generations + " + std::to_string(seeded.size()) + " fixtures");
}

// --- retrieval oracle ------------------------------------------------------------------------

Outcome retrieval_oracle() {
  auto mock = bundled_mock();
  knowledge::KnowledgeBase kb(mock);
  static const std::vector<std::string> words = {
      "sales",  "region", "trend",   "inventory", "tobacco", "palette", "layout", "map",    "pie",  "gauge",
      "police", "energy", "grid",    "hospital",  "retail",  "border",  "icon",   "column", "row",  "kpi",
      "table",  "flight", "revenue", "stock",     "warm",    "cool",    "blue",   "green",  "leaf", "warehouse"};
  Rng rng(855);
  auto sentence = [&](int len) {
    std::string s;
    for (int i = 0; i < len; ++i) s += (i ? " " : "") + words[rng.below(words.size())];
    return s;
  };
  for (int i = 0; i < 200; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "doc%03d", i);
    kb.add({id, KnowledgeKind::DesignPattern, sentence(rng.between(3, 12)), std::nullopt, {}});
  }
  const auto docs = kb.documents();
  Tally tally;
  for (int q = 0; q < 50; ++q) {
    const auto query = sentence(rng.between(1, 6));
    const auto k = static_cast<std::size_t>(rng.between(1, 20));
    const auto got = kb.retrieve_topk(query, k);
    // Brute force: plain cosine against every stored vector, full sort.
    const auto qv = provider::hash_embedding(query, kb.dimension());
    std::vector<knowledge::Hit> all;
    for (const auto& d : docs) {
      double dot = 0, nq = 0, nd = 0;
      for (std::size_t i = 0; i < qv.size(); ++i) {
        dot += qv[i] * d.embedding[i];
        nq += qv[i] * qv[i];
        nd += d.embedding[i] * d.embedding[i];
      }
      all.push_back({d.id, dot / std::sqrt(nq * nd)});
    }
    std::sort(all.begin(), all.end(), [](const knowledge::Hit& a, const knowledge::Hit& b) {
      if (std::abs(a.score - b.score) > 1e-12) return a.score > b.score;
      return a.id < b.id;
    });
    all.resize(std::min(k, all.size()));
    bool same = got.size() == all.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].id == all[i].id && std::abs(got[i].score - all[i].score) <= 1e-9;
    }
    tally.expect(same, "query '" + query + "'");
  }
  return tally.outcome("200 docs, 50 queries");
}

// --- palette properties ------------------------------------------------------------------------

void check_palette(const Palette& p, Tally& tally, const std::string& origin) {
  namespace oracle = test::color;
  if (p.kind == PaletteKind::Categorical) {
    double worst = 1e9;
    for (std::size_t i = 0; i < p.colors.size(); ++i)
      for (std::size_t j = i + 1; j < p.colors.size(); ++j) worst = std::min(worst, oracle::de(p.colors[i], p.colors[j]));
    tally.expect(p.colors.size() >= 2 && worst >= 15.0, origin + ": min CIEDE2000 " + fmt(worst));
  } else {
    bool mono = p.colors.size() >= 2;
    const double dir = oracle::lab(p.colors.back()).L - oracle::lab(p.colors.front()).L;
    for (std::size_t i = 1; mono && i < p.colors.size(); ++i) {
      mono = (oracle::lab(p.colors[i]).L - oracle::lab(p.colors[i - 1]).L) * dir > 0;
    }
    tally.expect(mono, origin + ": lightness not strictly monotone");
  }
}

Outcome palette_properties() {
  auto mock = bundled_mock();
  Tally tally;
  std::size_t categorical = 0, sequential = 0;
  auto count = [&](const Palette& p) { (p.kind == PaletteKind::Categorical ? categorical : sequential)++; };
  for (const auto& name : stylization::preset_names()) {
    for (auto kind : enum_values<PaletteKind>()) {
      const auto p = stylization::preset_palette(name, kind);
      check_palette(p, tally, "preset " + name);
      count(p);
    }
  }
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto spec = generated_spec(seed, *mock);
    check_palette(spec.style.palette, tally, "stylize seed " + std::to_string(seed));
    count(spec.style.palette);
  }
  Rng rng(856);
  for (int trial = 0; trial < 300; ++trial) {
    Palette p;
    p.kind = rng.chance(0.5) ? PaletteKind::Categorical : PaletteKind::Sequential;
    p.name = "random";
    const int n = rng.between(1, 12);
    for (int i = 0; i < n; ++i)
      p.colors.push_back({static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
                          static_cast<std::uint8_t>(rng.below(256))});
    const auto fixed = stylization::repair_palette(p).palette;
    check_palette(fixed, tally, "repair trial " + std::to_string(trial));
    count(fixed);
  }
  return tally.outcome(std::to_string(categorical) + " categorical, " + std::to_string(sequential) + " sequential");
}

// --- parallelism --------------------------------------------------------------------------------

Outcome parallelism() {
  using namespace std::chrono_literals;
  const auto graph = planner::classify_dependencies({task("a", TaskKind::ModifyStyle), task("b", TaskKind::ModifyStyle),
                                                     task("c", TaskKind::ModifyStyle),
                                                     task("d", TaskKind::ModifyStyle, {"a", "b", "c"})});
  const auto plan = planner::schedule_waves(graph);
  executor::Registry reg{{TaskKind::ModifyStyle, [](const executor::AgentContext& ctx) {
                            std::this_thread::sleep_for(100ms);
                            return executor::AgentOutput{ctx.task.id, {}};
                          }}};
  executor::AgentMemory memory;
  const auto t0 = Clock::now();
  const auto results = executor::execute_plan(plan, graph, reg, memory);
  const double ms = ms_since(t0);
  const bool shape = plan.waves == std::vector<std::vector<std::string>>{{"a", "b", "c"}, {"d"}};
  return {shape && results.size() == 4 && ms < 240, "plan [[a,b,c],[d]] in " + fmt(ms) + " ms"};
}

// --- end-to-end determinism ------------------------------------------------------------------------

struct GenRun {
  int status = -1;
  std::string hash;
  std::string spec;
  double ms = 0;
};

GenRun run_gen(const fs::path& out) {
  const std::string cmd = std::string("\"") + DASHGEN_CLI +
                          "\" gen --prompt \"Build a dashboard to monitor the tobacco supply chain\" --seed 42"
                          " --mock bundled --out \"" + out.string() + "\" 2>/dev/null";
  GenRun r;
  const auto t0 = Clock::now();
  if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
    char buf[256];
    while (std::fgets(buf, sizeof buf, pipe)) r.hash += buf;
    r.status = ::pclose(pipe);
  }
  r.ms = ms_since(t0);
  while (!r.hash.empty() && std::isspace(static_cast<unsigned char>(r.hash.back()))) r.hash.pop_back();
  if (fs::exists(out)) r.spec = test::read_file(out);
  return r;
}

Outcome end_to_end_determinism() {
  const auto dir = fs::temp_directory_path() / ("dashgen-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto a = run_gen(dir / "a.dash.json");
  const auto b = run_gen(dir / "b.dash.json");
  fs::remove_all(dir);
  const bool ok = a.status == 0 && b.status == 0 && !a.spec.empty() && a.spec == b.spec && a.hash.size() == 16 &&
                  a.hash == b.hash && a.ms < 2000 && b.ms < 2000;
  return {ok, "content_hash " + a.hash + " / " + b.hash + ", spec bytes " + (a.spec == b.spec ? "identical" : "differ") +
                  ", " + fmt(a.ms) + " ms / " + fmt(b.ms) + " ms"};
}

// --- service replay --------------------------------------------------------------------------------

Outcome service_replay() {
  const auto dir = fs::temp_directory_path() / ("dashgen-accept-svc-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto mock = bundled_mock();
  auto make = [&] {
    service::ServiceConfig c;
    c.data_dir = dir;
    return std::make_shared<service::Service>(c, mock, knowledge::KnowledgeBase::open(mock, dir / "knowledge.json"));
  };
  auto svc = make();
  std::ostringstream transcript;
  auto step = [&](const std::string& method, const std::string& path, const json& body) {
    const auto r = svc->dispatch(method, path, body.dump());
    transcript << method << ' ' << path << ' ' << r.status << ' ' << hex_digest(fnv1a64(r.text()));
    if (r.body.contains("entry")) transcript << ' ' << r.body["entry"]["modification_summary"].get<std::string>();
    transcript << '\n';
    return r;
  };
  const auto sid = step("POST", "/sessions", {}).body["session_id"].get<std::string>();
  step("POST", "/sessions/" + sid + "/messages", {{"text", "Build a dashboard to monitor the tobacco supply chain"}});
  step("POST", "/sessions/" + sid + "/messages", {{"text", "Add a pie chart showing product category distribution"}});
  step("POST", "/sessions/" + sid + "/messages", {{"text", "Make the style warmer"}});
  step("POST", "/sessions/" + sid + "/actions", {{"action", "ModifyLayout"}, {"template", "template_2"}});
  const auto history = step("GET", "/sessions/" + sid + "/history", {}).text();

  Tally tally;
  tally.expect(transcript.str() == test::read_fixture("service_transcript.txt"), "transcript differs from golden");
  svc.reset();
  svc = make();
  tally.expect(svc->dispatch("GET", "/sessions/" + sid + "/history", "").text() == history, "history changed after restart");
  for (const auto& s : service::replay_session(dir / "sessions" / (sid + ".jsonl"), *mock, service::ServiceConfig{})) {
    tally.expect(s.ok(), s.entry_id + " replays to " + s.reproduced);
  }
  fs::remove_all(dir);
  return tally.outcome("6 requests, restart, log replay");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dag-fidelity", dag_fidelity},
      {"scheduler-oracle", scheduler_oracle},
      {"layout-invariants", layout_invariants},
      {"overlap-model", overlap_model},
      {"dsl-round-trip", dsl_round_trip},
      {"evaluator-closure", evaluator_closure},
      {"retrieval-oracle", retrieval_oracle},
      {"palette-properties", palette_properties},
      {"parallelism", parallelism},
      {"end-to-end-determinism", end_to_end_determinism},
      {"service-replay", service_replay},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %-24s %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    failures += o.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures;
}
