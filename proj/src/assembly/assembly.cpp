#include "dashgen/assembly/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dashgen/common/resources.hpp"
#include "dashgen/dsl/dsl.hpp"

namespace dashgen::assembly {

namespace {

constexpr double kEdgeTolerance = 1e-9;
constexpr std::size_t kMaxViews = 12;
constexpr std::size_t kMaxLevel1 = 4;

}  // namespace

double intersection_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

Rect ReferenceGrid::cell(std::size_t k) const {
  const auto r = static_cast<int>(k) / cols;
  const auto c = static_cast<int>(k) % cols;
  const double cw = static_cast<double>(screen.width) / cols;
  const double ch = static_cast<double>(screen.height) / rows;
  // Edges from the same formula, so neighbouring cells share them exactly.
  const double x0 = c * cw, x1 = (c + 1 == cols) ? screen.width : (c + 1) * cw;
  const double y0 = r * ch, y1 = (r + 1 == rows) ? screen.height : (r + 1) * ch;
  return {x0, y0, x1 - x0, y1 - y0};
}

double OverlapProfile::sum() const { return std::accumulate(p.begin(), p.end(), 0.0); }

OverlapProfile compute_overlap_profile(const Rect& rect, const ReferenceGrid& grid, std::string view_id) {
  if (grid.rows < 1 || grid.cols < 1) throw InvariantViolation("reference grid needs at least one cell");
  const double W = grid.screen.width, H = grid.screen.height;
  if (rect.w < 0 || rect.h < 0 || rect.x < -kEdgeTolerance || rect.y < -kEdgeTolerance ||
      rect.right() > W + kEdgeTolerance || rect.bottom() > H + kEdgeTolerance) {
    throw OutOfBounds("rectangle leaves the " + std::to_string(grid.screen.width) + "x" +
                      std::to_string(grid.screen.height) + " screen");
  }
  OverlapProfile out;
  out.view_id = std::move(view_id);
  out.p.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto cell = grid.cell(k);
    out.p[k] = std::clamp(intersection_area(rect, cell) / cell.area(), 0.0, 1.0);
  }
  return out;
}

namespace {

template <typename ValueOf>
std::map<std::string, double> accumulate_nodes(const Grouping& grouping, ValueOf value_of) {
  std::map<std::string, double> out;
  std::set<std::string> seen;
  for (const auto& [node, views] : grouping) {
    if (views.empty()) throw EmptyNode("layout node '" + node + "' holds no views");
    double total = 0;
    for (const auto& v : views) {
      if (!seen.insert(v).second) throw InvariantViolation("view '" + v + "' assigned to two nodes");
      total += value_of(v);
    }
    if (!(total > 0)) throw InvariantViolation("layout node '" + node + "' has no positive importance");
    out[node] = total;
  }
  return out;
}

}  // namespace

std::map<std::string, double> compute_importance(const std::map<std::string, OverlapProfile>& profiles,
                                                 const Grouping& grouping) {
  return accumulate_nodes(grouping, [&](const std::string& v) {
    auto it = profiles.find(v);
    if (it == profiles.end()) throw InvariantViolation("no overlap profile for view '" + v + "'");
    return it->second.sum();
  });
}

std::map<std::string, double> compute_importance(const std::map<std::string, double>& weights,
                                                 const Grouping& grouping) {
  return accumulate_nodes(grouping, [&](const std::string& v) {
    auto it = weights.find(v);
    if (it == weights.end()) throw InvariantViolation("no importance weight for view '" + v + "'");
    return it->second;
  });
}

Orientation choose_orientation(const std::vector<double>& /*level1_importance*/, double aspect) {
  return aspect >= kColumnAspect ? Orientation::Column : Orientation::Row;
}

Orientation choose_orientation(const std::vector<OverlapProfile>& profiles, const ReferenceGrid& grid) {
  double min_x = 1, max_x = 0, min_y = 1, max_y = 0;
  for (const auto& prof : profiles) {
    double mass = 0, cx = 0, cy = 0;
    for (std::size_t k = 0; k < prof.p.size(); ++k) {
      const auto cell = grid.cell(k);
      const double m = prof.p[k] * cell.area();
      mass += m;
      cx += m * (cell.x + cell.w / 2);
      cy += m * (cell.y + cell.h / 2);
    }
    if (mass <= 0) continue;
    cx /= mass * grid.screen.width;
    cy /= mass * grid.screen.height;
    min_x = std::min(min_x, cx);
    max_x = std::max(max_x, cx);
    min_y = std::min(min_y, cy);
    max_y = std::max(max_y, cy);
  }
  const double sx = std::max(0.0, max_x - min_x), sy = std::max(0.0, max_y - min_y);
  return sx >= sy ? Orientation::Column : Orientation::Row;
}

std::size_t representative_view(const std::vector<ViewSpec>& views) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < views.size(); ++i) {
    if (views[i].importance > views[best].importance) best = i;
  }
  return best;
}

// --- generation path --------------------------------------------------------------

namespace {

struct Cluster {
  std::vector<std::size_t> members;  // indices into views, display order
  double weight(const std::vector<ViewSpec>& views) const {
    double w = 0;
    for (auto i : members) w += views[i].importance;
    return w;
  }
};

/// True when a exceeds b beyond rounding noise, so uniformly scaled weights
/// take the same decisions.
bool heavier(double a, double b) { return a > b * (1.0 + 1e-12); }

std::vector<Cluster> cluster_views(const std::vector<ViewSpec>& views, std::size_t rep) {
  std::vector<Cluster> clusters;
  if (views.size() <= kMaxLevel1) {
    clusters.push_back({{rep}});
    for (std::size_t i = 0; i < views.size(); ++i) {
      if (i != rep) clusters.push_back({{i}});
    }
    return clusters;
  }

  // Same analysis task -> same node; the representative's cluster leads.
  std::vector<AnalysisTask> order = {views[rep].analysis_task};
  for (const auto& v : views) {
    if (std::find(order.begin(), order.end(), v.analysis_task) == order.end()) order.push_back(v.analysis_task);
  }
  for (auto task : order) {
    Cluster c;
    if (task == views[rep].analysis_task) c.members.push_back(rep);
    for (std::size_t i = 0; i < views.size(); ++i) {
      if (i != rep && views[i].analysis_task == task) c.members.push_back(i);
    }
    clusters.push_back(std::move(c));
  }

  // Spare level-1 slots go to the most crowded clusters.
  while (clusters.size() < kMaxLevel1) {
    std::size_t pick = clusters.size();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].members.size() >= 4 && (pick == clusters.size() || clusters[i].members.size() > clusters[pick].members.size())) {
        pick = i;
      }
    }
    if (pick == clusters.size()) break;
    auto& src = clusters[pick].members;
    const auto keep = (src.size() + 1) / 2;
    Cluster tail{{src.begin() + static_cast<std::ptrdiff_t>(keep), src.end()}};
    src.resize(keep);
    clusters.insert(clusters.begin() + static_cast<std::ptrdiff_t>(pick) + 1, std::move(tail));
  }

  // The representative's node must carry the largest weight.
  for (;;) {
    std::size_t heaviest = 0;
    for (std::size_t i = 1; i < clusters.size(); ++i) {
      if (heavier(clusters[i].weight(views), clusters[heaviest].weight(views))) heaviest = i;
    }
    if (heaviest == 0 || !heavier(clusters[heaviest].weight(views), clusters[0].weight(views))) break;
    auto& src = clusters[heaviest].members;
    std::size_t light = 0;
    for (std::size_t k = 1; k < src.size(); ++k) {
      if (!heavier(views[src[k]].importance, views[src[light]].importance) &&
          !heavier(views[src[light]].importance, views[src[k]].importance)) {
        light = k;  // tie: later in display order
      } else if (views[src[k]].importance < views[src[light]].importance) {
        light = k;
      }
    }
    clusters[0].members.push_back(src[light]);
    src.erase(src.begin() + static_cast<std::ptrdiff_t>(light));
  }
  return clusters;
}

LayoutTree generate(const std::vector<ViewSpec>& views, ScreenSize screen) {
  const auto rep = representative_view(views);
  auto clusters = cluster_views(views, rep);
  std::vector<double> weights;
  double total = 0;
  for (const auto& c : clusters) {
    weights.push_back(c.weight(views));
    total += weights.back();
  }
  LayoutTree tree;
  tree.screen = screen;
  const auto root_orientation = choose_orientation(weights, screen.aspect());
  std::vector<LayoutNode> level1;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const double fraction = weights[i] / total;
    const auto& members = clusters[i].members;
    if (members.size() == 1) {
      level1.push_back(LayoutNode::leaf(views[members[0]].id, fraction));
      continue;
    }
    std::vector<LayoutNode> leaves;
    for (auto m : members) leaves.push_back(LayoutNode::leaf(views[m].id, views[m].importance / weights[i]));
    level1.push_back(LayoutNode::group(orthogonal(root_orientation), fraction, std::move(leaves)));
  }
  tree.root = LayoutNode::group(root_orientation, 1.0, std::move(level1));
  return tree;
}

// --- template path --------------------------------------------------------------------

void collect_leaves(const LayoutNode& n, std::vector<const LayoutNode*>& out) {
  if (n.is_leaf()) {
    out.push_back(&n);
    return;
  }
  for (const auto& c : n.children) collect_leaves(c, out);
}

void renormalize(std::vector<LayoutNode>& siblings) {
  double total = 0;
  for (const auto& s : siblings) total += s.fraction;
  for (auto& s : siblings) s.fraction /= total;
}

/// Removes leaves whose id is in `drop`, prunes empty groups and collapses
/// one-child groups below the root.
void prune(LayoutNode& node, const std::set<std::string>& drop) {
  auto& ch = node.children;
  for (auto& c : ch) {
    if (!c.is_leaf()) prune(c, drop);
  }
  ch.erase(std::remove_if(ch.begin(), ch.end(), [&](const LayoutNode& c) {
             return c.is_leaf() ? drop.count(c.view_id) > 0 : c.children.empty();
           }),
           ch.end());
  for (auto& c : ch) {
    if (!c.is_leaf() && c.children.size() == 1) {
      auto only = std::move(c.children.front());
      only.fraction = c.fraction;
      c = std::move(only);
    }
  }
  if (!ch.empty()) renormalize(ch);
}

void rename_leaves(LayoutNode& n, const std::map<std::string, std::string>& mapping) {
  if (n.is_leaf()) {
    n.view_id = mapping.at(n.view_id);
    return;
  }
  for (auto& c : n.children) rename_leaves(c, mapping);
}

LayoutTree fill_template(const std::vector<ViewSpec>& views, const LayoutTree& tmpl, ScreenSize screen) {
  LayoutTree tree = tmpl;
  tree.screen = screen;
  const ReferenceGrid grid{12, 12, screen};

  // Slot importance from where the template puts each slot.
  std::map<std::string, OverlapProfile> profiles;
  std::vector<std::string> slot_order;
  for (const auto& pv : realize(tree)) {
    profiles[pv.view_id] = compute_overlap_profile(pv.rect, grid, pv.view_id);
    slot_order.push_back(pv.view_id);
  }
  std::vector<std::size_t> slots(slot_order.size());
  std::iota(slots.begin(), slots.end(), 0);
  std::stable_sort(slots.begin(), slots.end(), [&](std::size_t a, std::size_t b) {
    return profiles[slot_order[a]].sum() > profiles[slot_order[b]].sum() + 1e-9;
  });
  std::vector<std::size_t> ranked(views.size());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return views[a].importance > views[b].importance; });

  std::map<std::string, std::string> mapping;
  std::set<std::string> unused;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& slot = slot_order[slots[k]];
    if (k < ranked.size()) {
      mapping[slot] = views[ranked[k]].id;
    } else {
      unused.insert(slot);
    }
  }
  if (!unused.empty()) prune(tree.root, unused);
  for (const auto& u : unused) mapping[u] = u;
  rename_leaves(tree.root, mapping);

  // Views beyond the template's slots join the last level-1 node.
  if (ranked.size() > slots.size()) {
    auto& last = tree.root.children.back();
    if (last.is_leaf()) {
      const double f = last.fraction;
      last = LayoutNode::group(orthogonal(*tree.root.orientation), f, {LayoutNode::leaf(last.view_id, 1.0)});
    }
    for (std::size_t k = slots.size(); k < ranked.size(); ++k) {
      last.children.push_back(LayoutNode::leaf(views[ranked[k]].id, 1.0));
    }
    auto weight_of = [&](const std::string& id) {
      return std::find_if(views.begin(), views.end(), [&](const ViewSpec& v) { return v.id == id; })->importance;
    };
    double total = 0;
    for (const auto& c : last.children) total += weight_of(c.view_id);
    for (auto& c : last.children) c.fraction = weight_of(c.view_id) / total;
  }
  return tree;
}

}  // namespace

LayoutTree build_layout_tree(const std::vector<ViewSpec>& views, const std::optional<LayoutTree>& layout_template,
                             ScreenSize screen) {
  if (views.empty()) throw InvariantViolation("layout needs at least one view");
  if (views.size() > kMaxViews) {
    throw TooManyViews(std::to_string(views.size()) + " views exceed the limit of " + std::to_string(kMaxViews));
  }
  for (const auto& v : views) {
    if (!(v.importance > 0)) throw InvariantViolation("view '" + v.id + "' needs positive importance");
  }
  return layout_template ? fill_template(views, *layout_template, screen) : generate(views, screen);
}

LayoutTree load_template(const std::string& id) {
  const auto path = "layout_templates/" + id + ".dash.json";
  if (!resources::exists(path)) throw UnknownTemplate("unknown layout template '" + id + "'");
  return dsl::layout_from_json(resources::json(path).at("layout"));
}

std::vector<std::string> template_ids() {
  std::vector<std::string> out;
  for (const auto& p : resources::list("layout_templates/")) {
    auto name = p.substr(p.rfind('/') + 1);
    out.push_back(name.substr(0, name.find('.')));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- realization --------------------------------------------------------------------

namespace {

void realize_node(const LayoutNode& node, const Rect& box, std::vector<PlacedView>& out) {
  if (node.is_leaf()) {
    out.push_back({node.view_id, box});
    return;
  }
  const bool side_by_side = node.orientation.value_or(Orientation::Column) == Orientation::Column;
  const double start = side_by_side ? box.x : box.y;
  const double extent = side_by_side ? box.w : box.h;
  const double end = start + extent;
  double cumulative = 0;
  double prev = start;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    cumulative += node.children[i].fraction;
    const double next = (i + 1 == node.children.size()) ? end : start + extent * cumulative;
    const Rect child = side_by_side ? Rect{prev, box.y, next - prev, box.h} : Rect{box.x, prev, box.w, next - prev};
    realize_node(node.children[i], child, out);
    prev = next;
  }
}

struct UnitBox {
  int c0, r0, c1, r1;  // grid-unit span, half-open
};

void snap_node(const LayoutNode& node, const UnitBox& box, std::vector<std::pair<std::string, UnitBox>>& out) {
  if (node.is_leaf()) {
    out.emplace_back(node.view_id, box);
    return;
  }
  const bool side_by_side = node.orientation.value_or(Orientation::Column) == Orientation::Column;
  const int lo = side_by_side ? box.c0 : box.r0;
  const int hi = side_by_side ? box.c1 : box.r1;
  std::vector<double> fractions;
  for (const auto& c : node.children) fractions.push_back(c.fraction);
  const auto units = apportion(fractions, hi - lo);
  int pos = lo;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const UnitBox child = side_by_side ? UnitBox{pos, box.r0, pos + units[i], box.r1}
                                       : UnitBox{box.c0, pos, box.c1, pos + units[i]};
    snap_node(node.children[i], child, out);
    pos += units[i];
  }
}

}  // namespace

std::vector<PlacedView> realize(const LayoutTree& tree, const Rect& region) {
  std::vector<PlacedView> out;
  realize_node(tree.root, region, out);
  return out;
}

std::vector<PlacedView> realize(const LayoutTree& tree) {
  return realize(tree, Rect{0, 0, static_cast<double>(tree.screen.width), static_cast<double>(tree.screen.height)});
}

std::vector<int> apportion(const std::vector<double>& fractions, int units) {
  const auto n = fractions.size();
  std::vector<int> out(n, 0);
  if (n == 0) return out;
  double total = 0;
  for (double f : fractions) total += f;
  std::vector<double> ideal(n);
  for (std::size_t i = 0; i < n; ++i) ideal[i] = total > 0 ? fractions[i] / total * units : static_cast<double>(units) / n;
  const int floor_min = units >= static_cast<int>(n) ? 1 : 0;
  int sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::max(floor_min, static_cast<int>(std::floor(ideal[i] + 1e-9)));
    sum += out[i];
  }
  while (sum > units) {  // minimums overshot: take from the most over-served
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (out[i] > floor_min && (pick == n || out[i] - ideal[i] > out[pick] - ideal[pick])) pick = i;
    }
    --out[pick];
    --sum;
  }
  while (sum < units) {  // hand out by largest remainder, earliest first
    std::size_t pick = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (ideal[i] - out[i] > ideal[pick] - out[pick] + 1e-12) pick = i;
    }
    ++out[pick];
    ++sum;
  }
  return out;
}

std::vector<PlacedView> realize_snapped(const LayoutTree& tree, const Rect& region, int grid_cols, int grid_rows) {
  std::vector<std::pair<std::string, UnitBox>> boxes;
  snap_node(tree.root, {0, 0, grid_cols, grid_rows}, boxes);
  const auto X = static_cast<long long>(std::llround(region.x));
  const auto Y = static_cast<long long>(std::llround(region.y));
  const auto W = static_cast<long long>(std::llround(region.w));
  const auto H = static_cast<long long>(std::llround(region.h));
  auto px = [&](int i) { return static_cast<double>(X + (static_cast<long long>(i) * W) / grid_cols); };
  auto py = [&](int j) { return static_cast<double>(Y + (static_cast<long long>(j) * H) / grid_rows); };
  std::vector<PlacedView> out;
  for (const auto& [id, b] : boxes) {
    out.push_back({id, Rect{px(b.c0), py(b.r0), px(b.c1) - px(b.c0), py(b.r1) - py(b.r0)}});
  }
  return out;
}

int tree_depth(const LayoutNode& root) {
  if (root.is_leaf()) return 0;
  int d = 0;
  for (const auto& c : root.children) d = std::max(d, 1 + tree_depth(c));
  return d;
}

// --- small multiples -------------------------------------------------------------------

SmallMultipleArrangement compose_small_multiple(const ViewSpec& view, double aspect) {
  if (view.charts.empty()) throw RuleViolation("view '" + view.id + "' has no charts");
  SmallMultipleArrangement out;
  out.orientation = aspect >= 1.0 ? Orientation::Column : Orientation::Row;
  const auto n = view.charts.size();

  std::vector<double> shares;
  if (n == 1) {
    shares = {1.0};
  } else {
    switch (view.analysis_task) {
      case AnalysisTask::Comparison:
        for (const auto& c : view.charts) {
          if (c.chart_type != view.charts[0].chart_type) {
            throw RuleViolation("comparison view '" + view.id + "' mixes " + std::string(enum_name(view.charts[0].chart_type)) +
                                " and " + std::string(enum_name(c.chart_type)));
          }
        }
        shares.assign(n, 1.0 / static_cast<double>(n));
        break;
      case AnalysisTask::Highlight: {
        const auto lead = view.charts[0].chart_type;
        if (lead != ChartType::Text && lead != ChartType::Glyph) {
          throw RuleViolation("highlight view '" + view.id + "' must lead with a number or gauge");
        }
        shares.push_back(kHighlightShare);
        for (std::size_t i = 1; i < n; ++i) shares.push_back((1.0 - kHighlightShare) / static_cast<double>(n - 1));
        break;
      }
      case AnalysisTask::Decomposition:
        for (std::size_t i = 1; i < n; ++i) {
          if (view.charts[i].chart_type == view.charts[0].chart_type) {
            throw RuleViolation("decomposition view '" + view.id + "' repeats its primary chart type");
          }
        }
        shares.push_back(kDecompositionShare);
        for (std::size_t i = 1; i < n; ++i) shares.push_back((1.0 - kDecompositionShare) / static_cast<double>(n - 1));
        break;
      case AnalysisTask::Overview:
        shares.assign(n, 1.0 / static_cast<double>(n));
        break;
    }
  }

  double pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = (i + 1 == n) ? 1.0 : pos + shares[i];
    ChartSlot s;
    s.chart_index = i;
    s.color_index = i;
    s.rect = out.orientation == Orientation::Column ? Rect{pos, 0, next - pos, 1} : Rect{0, pos, 1, next - pos};
    out.slots.push_back(s);
    pos = next;
  }
  return out;
}

}  // namespace dashgen::assembly
