#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "dashgen/assembly/assembly.hpp"
#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/dsl/dsl.hpp"

using namespace dashgen;
using namespace dashgen::assembly;

namespace {

ViewSpec view(std::string id, double importance, AnalysisTask task = AnalysisTask::Overview,
              std::vector<ChartType> charts = {ChartType::Bar}) {
  ViewSpec v;
  v.id = std::move(id);
  v.title = v.id;
  v.analysis_task = task;
  v.importance = importance;
  for (auto c : charts) {
    ChartSpec cs;
    cs.chart_type = c;
    v.charts.push_back(cs);
  }
  return v;
}

// Independent overlap oracle in integer arithmetic.
long long overlap_1d(long long a0, long long a1, long long b0, long long b1) {
  return std::max(0LL, std::min(a1, b1) - std::max(a0, b0));
}

double overlap_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0;
}

std::vector<double> fractions_of(const LayoutNode& n) {
  std::vector<double> f;
  for (const auto& c : n.children) f.push_back(c.fraction);
  return f;
}

double node_weight(const LayoutNode& n, const std::map<std::string, double>& w) {
  if (n.is_leaf()) return w.at(n.view_id);
  double s = 0;
  for (const auto& c : n.children) s += node_weight(c, w);
  return s;
}

}  // namespace

TEST_CASE("overlap profiles on small grids") {
  const ReferenceGrid g2{2, 2, {1920, 1080}};
  auto left = compute_overlap_profile({0, 0, 960, 1080}, g2, "a");
  CHECK(left.p == std::vector<double>{1, 0, 1, 0});
  CHECK(left.sum() == doctest::Approx(2.0));

  auto full = compute_overlap_profile({0, 0, 1920, 1080}, ReferenceGrid{7, 5, {1920, 1080}});
  for (double p : full.p) CHECK(p == doctest::Approx(1.0));

  auto quarter = compute_overlap_profile({480, 270, 960, 540}, g2);
  CHECK(quarter.p == std::vector<double>{0.25, 0.25, 0.25, 0.25});

  CHECK_THROWS_AS(compute_overlap_profile({1000, 0, 1000, 10}, g2), OutOfBounds);
  CHECK_THROWS_AS(compute_overlap_profile({-1, 0, 10, 10}, g2), OutOfBounds);
}

TEST_CASE("overlap area identity holds exactly for integer rectangles") {
  Rng rng(41);
  const ReferenceGrid grid{12, 12, {1920, 1080}};
  for (int trial = 0; trial < 500; ++trial) {
    const long long x0 = rng.between(0, 1919), y0 = rng.between(0, 1079);
    const long long x1 = rng.between(x0 + 1, 1920), y1 = rng.between(y0 + 1, 1080);
    const Rect r{double(x0), double(y0), double(x1 - x0), double(y1 - y0)};
    const auto prof = compute_overlap_profile(r, grid);
    double covered = 0;
    long long covered_exact = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      // cells are 160 x 90 on this screen
      const long long cx = static_cast<long long>(k % 12) * 160, cy = static_cast<long long>(k / 12) * 90;
      const auto expect = overlap_1d(x0, x1, cx, cx + 160) * overlap_1d(y0, y1, cy, cy + 90);
      REQUIRE(prof.p[k] == doctest::Approx(double(expect) / (160.0 * 90.0)).epsilon(1e-15));
      covered += prof.p[k] * 160.0 * 90.0;
      covered_exact += std::llround(prof.p[k] * 160.0 * 90.0);
    }
    // Each cell term recovers its integer area; the float sum only carries rounding.
    REQUIRE(covered_exact == (x1 - x0) * (y1 - y0));
    REQUIRE(std::abs(covered - r.area()) <= 1e-12 * r.area());
  }
}

TEST_CASE("node importance sums profiles or weights") {
  const ReferenceGrid g2{2, 2, {1920, 1080}};
  std::map<std::string, OverlapProfile> profiles{
      {"a", compute_overlap_profile({0, 0, 960, 1080}, g2, "a")},
      {"b", compute_overlap_profile({480, 270, 960, 540}, g2, "b")}};
  auto imp = compute_importance(profiles, Grouping{{"n1", {"a", "b"}}});
  CHECK(imp.at("n1") == doctest::Approx(3.0));
  auto single = compute_importance(profiles, Grouping{{"n1", {"a"}}, {"n2", {"b"}}});
  CHECK(single.at("n1") == doctest::Approx(profiles["a"].sum()));
  CHECK(single.at("n2") == doctest::Approx(profiles["b"].sum()));

  std::map<std::string, double> w{{"x", 0.6}, {"y", 0.4}};
  CHECK(compute_importance(w, Grouping{{"n", {"x", "y"}}}).at("n") == doctest::Approx(1.0));

  CHECK_THROWS_AS(compute_importance(w, Grouping{{"n", {}}}), EmptyNode);
  CHECK_THROWS_AS(compute_importance(w, Grouping{{"n", {"x"}}, {"m", {"x"}}}), InvariantViolation);
  CHECK_THROWS_AS(compute_importance(w, Grouping{{"n", {"zz"}}}), InvariantViolation);
}

TEST_CASE("orientation rules") {
  CHECK(choose_orientation({1, 1, 1}, 1920.0 / 1080.0) == Orientation::Column);
  CHECK(choose_orientation({1, 1, 1}, 1080.0 / 1920.0) == Orientation::Row);
  CHECK(choose_orientation({1}, 1.4) == Orientation::Column);
  CHECK(choose_orientation({1}, 1.39) == Orientation::Row);

  const ReferenceGrid g{12, 12, {1920, 1080}};
  std::vector<OverlapProfile> xs{compute_overlap_profile({0, 0, 640, 1080}, g),
                                 compute_overlap_profile({640, 0, 640, 1080}, g),
                                 compute_overlap_profile({1280, 0, 640, 1080}, g)};
  CHECK(choose_orientation(xs, g) == Orientation::Column);
  std::vector<OverlapProfile> ys{compute_overlap_profile({0, 0, 1920, 360}, g),
                                 compute_overlap_profile({0, 360, 1920, 360}, g)};
  CHECK(choose_orientation(ys, g) == Orientation::Row);
}

TEST_CASE("generated trees for small view sets") {
  auto one = build_layout_tree({view("v1", 1)});
  REQUIRE(one.root.children.size() == 1);
  CHECK(one.root.children[0].is_leaf());
  CHECK(one.root.children[0].fraction == 1.0);

  auto three = build_layout_tree({view("v1", 1), view("v2", 2), view("v3", 1)});
  CHECK(three.root.orientation == Orientation::Column);
  REQUIRE(three.root.children.size() == 3);
  CHECK(three.root.children[0].view_id == "v2");
  CHECK(three.root.children[1].view_id == "v1");
  CHECK(three.root.children[2].view_id == "v3");
  // 2/4, 1/4, 1/4
  CHECK(fractions_of(three.root) == std::vector<double>{0.5, 0.25, 0.25});

  auto portrait = build_layout_tree({view("v1", 1), view("v2", 1)}, std::nullopt, ScreenSize{1080, 1920});
  CHECK(portrait.root.orientation == Orientation::Row);

  std::vector<ViewSpec> many;
  for (int i = 1; i <= 13; ++i) many.push_back(view("v" + std::to_string(i), 1));
  CHECK_THROWS_AS(build_layout_tree(many), TooManyViews);
  CHECK_THROWS_AS(build_layout_tree({}), InvariantViolation);
}

TEST_CASE("six views over three tasks group by task") {
  std::vector<ViewSpec> vs{view("v1", 1, AnalysisTask::Comparison), view("v2", 3, AnalysisTask::Highlight),
                           view("v3", 1, AnalysisTask::Comparison), view("v4", 1, AnalysisTask::Overview),
                           view("v5", 1, AnalysisTask::Overview), view("v6", 1, AnalysisTask::Highlight)};
  auto tree = build_layout_tree(vs);
  REQUIRE(tree.root.children.size() == 3);
  const auto& lead = tree.root.children[0];
  REQUIRE(lead.children.size() == 2);
  CHECK(lead.children[0].view_id == "v2");
  CHECK(lead.children[1].view_id == "v6");
  CHECK(lead.orientation == Orientation::Row);
  CHECK(lead.fraction == doctest::Approx(4.0 / 8.0));
  CHECK(tree.root.children[1].children[0].view_id == "v1");
  CHECK(tree.root.children[2].children[0].view_id == "v4");
  CHECK(dsl::validate(
            [&] {
              DashboardSpec s;
              s.title = "t";
              s.domain = "generic";
              s.views = vs;
              s.layout = tree;
              return s;
            }())
            .empty());
}

TEST_CASE("randomized layout invariants") {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  const std::vector<ScreenSize> screens{{1920, 1080}, {1080, 1920}, {2560, 1440}, {1280, 1024}};
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(1, 12));
    std::vector<ViewSpec> vs;
    std::map<std::string, double> w;
    for (std::size_t i = 0; i < n; ++i) {
      auto task = enum_values<AnalysisTask>()[static_cast<std::size_t>(rng.below(4))];
      const double imp = rng.chance(0.3) ? 1.0 : rng.uniform(0.1, 5.0);
      vs.push_back(view("v" + std::to_string(i + 1), imp, task));
      w[vs.back().id] = imp;
    }
    const auto screen = screens[static_cast<std::size_t>(trial) % screens.size()];
    const auto tree = build_layout_tree(vs, std::nullopt, screen);
    const auto& root = tree.root;

    bool ok = tree_depth(root) <= 2 && root.children.size() >= 1 && root.children.size() <= 4;
    double total = 0;
    for (const auto& c : root.children) total += node_weight(c, w);
    double sibling_sum = 0;
    std::set<std::string> seen;
    for (const auto& c : root.children) {
      sibling_sum += c.fraction;
      ok = ok && std::abs(c.fraction - node_weight(c, w) / total) <= 1e-9;
      if (!c.is_leaf()) {
        ok = ok && c.orientation == orthogonal(*root.orientation);
        double inner = 0;
        for (const auto& g : c.children) {
          ok = ok && g.is_leaf();
          inner += g.fraction;
          ok = ok && std::abs(g.fraction - w.at(g.view_id) / node_weight(c, w)) <= 1e-9;
          seen.insert(g.view_id);
        }
        ok = ok && std::abs(inner - 1.0) <= 1e-9;
      } else {
        seen.insert(c.view_id);
      }
    }
    ok = ok && std::abs(sibling_sum - 1.0) <= 1e-9 && seen.size() == n;

    // Representative dominance.
    const auto rep = vs[representative_view(vs)].id;
    std::size_t rep_node = 0;
    for (std::size_t i = 0; i < root.children.size(); ++i) {
      const auto leaves = LayoutTree{root.children[i], screen}.leaf_ids();
      if (std::find(leaves.begin(), leaves.end(), rep) != leaves.end()) rep_node = i;
    }
    ok = ok && rep_node == 0;
    for (const auto& c : root.children) ok = ok && c.fraction <= root.children[rep_node].fraction + 1e-12;

    // Tiling, exact and snapped.
    for (const auto& placed : {realize(tree), realize_snapped(tree, {0, 0, double(screen.width), double(screen.height)})}) {
      double area = 0;
      for (std::size_t i = 0; i < placed.size(); ++i) {
        const auto& r = placed[i].rect;
        ok = ok && r.w > 0 && r.h > 0 && r.x >= -1e-9 && r.y >= -1e-9 && r.x + r.w <= screen.width + 1e-9 &&
             r.y + r.h <= screen.height + 1e-9;
        area += r.area();
        for (std::size_t j = i + 1; j < placed.size(); ++j) ok = ok && overlap_area(r, placed[j].rect) <= 1e-6;
      }
      ok = ok && std::abs(area - double(screen.width) * screen.height) <= 1e-6 * screen.width * screen.height;
    }

    // Scaling all weights leaves the tree unchanged.
    auto scaled = vs;
    const double c = rng.uniform(0.01, 100.0);
    for (auto& v : scaled) v.importance *= c;
    const auto tree2 = build_layout_tree(scaled, std::nullopt, screen);
    ok = ok && tree2.leaf_ids() == tree.leaf_ids() && tree2.root.children.size() == root.children.size();
    for (std::size_t i = 0; ok && i < root.children.size(); ++i) {
      ok = std::abs(tree2.root.children[i].fraction - root.children[i].fraction) <= 1e-9;
    }
    if (!ok) ++violations;
  }
  CHECK(violations == 0);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
}

TEST_CASE("apportion and snapping") {
  CHECK(apportion({0.5, 0.25, 0.25}, 12) == std::vector<int>{6, 3, 3});
  CHECK(apportion({1.0 / 3, 1.0 / 3, 1.0 / 3}, 12) == std::vector<int>{4, 4, 4});
  CHECK(apportion({0.9, 0.05, 0.05}, 12) == std::vector<int>{10, 1, 1});
  CHECK(apportion({0.4, 0.35, 0.25}, 12) == std::vector<int>{5, 4, 3});

  auto tree = build_layout_tree({view("v1", 2), view("v2", 1), view("v3", 1)});
  auto placed = realize_snapped(tree, {0, 64, 1920, 1016});
  REQUIRE(placed.size() == 3);
  CHECK(placed[0].rect == Rect{0, 64, 960, 1016});
  CHECK(placed[1].rect == Rect{960, 64, 480, 1016});
  CHECK(placed[2].rect == Rect{1440, 64, 480, 1016});
}

TEST_CASE("shipped templates") {
  CHECK(template_ids() == std::vector<std::string>{"template_1", "template_2", "template_3", "template_4"});
  CHECK_THROWS_AS(load_template("template_9"), UnknownTemplate);
  for (const auto& id : template_ids()) {
    auto t = load_template(id);
    CHECK(tree_depth(t.root) <= 2);
  }

  // template_3: big top slot, two below.
  auto t3 = load_template("template_3");
  auto tree = build_layout_tree({view("a", 1), view("b", 5), view("c", 2)}, t3);
  REQUIRE(tree.root.children.size() == 2);
  CHECK(tree.root.children[0].view_id == "b");
  CHECK(tree.root.children[0].fraction == doctest::Approx(0.6));

  // Fewer views than slots collapses the tree.
  auto sparse = build_layout_tree({view("a", 1), view("b", 2)}, load_template("template_1"));
  CHECK(sparse.leaf_ids().size() == 2);
  double sum = 0;
  for (const auto& c : sparse.root.children) sum += c.fraction;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(tree_depth(sparse.root) <= 2);

  // More views than slots go to the last level-1 node.
  std::vector<ViewSpec> five{view("a", 5), view("b", 4), view("c", 3), view("d", 2), view("e", 1)};
  auto packed = build_layout_tree(five, t3);
  CHECK(packed.leaf_ids().size() == 5);
  CHECK(tree_depth(packed.root) == 2);
  DashboardSpec s;
  s.title = "t";
  s.domain = "generic";
  s.views = five;
  s.layout = packed;
  CHECK(dsl::validate(s).empty());
}

TEST_CASE("small multiple rules") {
  auto cmp = compose_small_multiple(view("v", 1, AnalysisTask::Comparison, {ChartType::Bar, ChartType::Bar}));
  REQUIRE(cmp.slots.size() == 2);
  CHECK(cmp.slots[0].rect.w == doctest::Approx(0.5));
  CHECK(cmp.slots[1].rect.w == doctest::Approx(0.5));
  CHECK(cmp.slots[0].color_index == 0);
  CHECK(cmp.slots[1].color_index == 1);
  CHECK_THROWS_AS(compose_small_multiple(view("v", 1, AnalysisTask::Comparison, {ChartType::Bar, ChartType::Line})),
                  RuleViolation);

  auto dec = compose_small_multiple(view("v", 1, AnalysisTask::Decomposition, {ChartType::Pie, ChartType::Bar}));
  CHECK(dec.slots[0].rect.area() == doctest::Approx(0.55));
  CHECK(dec.slots[1].rect.area() == doctest::Approx(0.45));
  CHECK_THROWS_AS(compose_small_multiple(view("v", 1, AnalysisTask::Decomposition, {ChartType::Pie, ChartType::Pie})),
                  RuleViolation);

  auto hi = compose_small_multiple(view("v", 1, AnalysisTask::Highlight, {ChartType::Text, ChartType::Line}));
  CHECK(hi.slots[0].rect.area() >= 0.6 - 1e-12);
  CHECK_THROWS_AS(compose_small_multiple(view("v", 1, AnalysisTask::Highlight, {ChartType::Bar, ChartType::Line})),
                  RuleViolation);

  auto single = compose_small_multiple(view("v", 1, AnalysisTask::Overview, {ChartType::Table}));
  REQUIRE(single.slots.size() == 1);
  CHECK(single.slots[0].rect == Rect{0, 0, 1, 1});

  auto tall = compose_small_multiple(view("v", 1, AnalysisTask::Comparison, {ChartType::Bar, ChartType::Bar}), 0.5);
  CHECK(tall.orientation == Orientation::Row);
  CHECK(tall.slots[1].rect.y == doctest::Approx(0.5));

  ViewSpec empty = view("v", 1);
  empty.charts.clear();
  CHECK_THROWS_AS(compose_small_multiple(empty), RuleViolation);
}
