#include "dashgen/evaluator/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "dashgen/common/resources.hpp"
#include "dashgen/stylization/stylization.hpp"

namespace dashgen::evaluator {

using nlohmann::json;

namespace {

constexpr double kFractionTolerance = 1e-6;

int depth(const LayoutNode& n) {
  if (n.is_leaf()) return 0;
  int d = 0;
  for (const auto& c : n.children) d = std::max(d, 1 + depth(c));
  return d;
}

void collect(const LayoutNode& n, std::vector<std::string>& leaves, bool& sums_ok) {
  if (n.is_leaf()) {
    leaves.push_back(n.view_id);
    return;
  }
  double sum = 0;
  for (const auto& c : n.children) {
    sum += c.fraction;
    if (!(c.fraction > 0 && c.fraction <= 1 + kFractionTolerance)) sums_ok = false;
    collect(c, leaves, sums_ok);
  }
  if (n.children.empty() || std::abs(sum - 1.0) > kFractionTolerance) sums_ok = false;
}

std::string expand(std::string text, const std::string& value) {
  const std::string key = "{value}";
  if (auto pos = text.find(key); pos != std::string::npos) text.replace(pos, key.size(), value);
  return text;
}

}  // namespace

json to_json(const FeatureMetrics& m) {
  return {{"view_count", m.view_count},
          {"layout_depth", m.layout_depth},
          {"level1_count", m.level1_count},
          {"unplaced_views", m.unplaced_views},
          {"duplicate_ids", m.duplicate_ids},
          {"scivis_or_panel_present", m.scivis_or_panel_present},
          {"palette_kind_consistent", m.palette_kind_consistent},
          {"comparison_type_consistent", m.comparison_type_consistent},
          {"fraction_sums_ok", m.fraction_sums_ok}};
}

json to_json(const Verdict& v) {
  json out = {{"passed", v.passed}, {"violations", json::array()}};
  for (const auto& x : v.violations) out["violations"].push_back({{"rule", x.rule}, {"path", x.path}, {"message", x.message}});
  return out;
}

const std::vector<Rule>& rules() {
  static const std::vector<Rule> table = [] {
    std::vector<Rule> out;
    for (const auto& r : resources::json("evaluator_rules.json").at("rules")) {
      out.push_back({r.at("id").get<std::string>(), r.at("path").get<std::string>(),
                     r.at("message").get<std::string>(), r.value("enabled", true)});
    }
    return out;
  }();
  return table;
}

FeatureMetrics extract_metrics(const DashboardSpec& spec) {
  FeatureMetrics m;
  m.view_count = spec.views.size();
  m.layout_depth = depth(spec.layout.root);
  m.level1_count = spec.layout.root.is_leaf() ? 1 : spec.layout.root.children.size();

  std::vector<std::string> leaves;
  bool sums_ok = true;
  collect(spec.layout.root, leaves, sums_ok);
  m.fraction_sums_ok = sums_ok;

  std::map<std::string, std::size_t> view_ids, leaf_ids;
  for (const auto& v : spec.views) ++view_ids[v.id];
  for (const auto& l : leaves) ++leaf_ids[l];
  for (const auto& [id, n] : view_ids) {
    m.duplicate_ids += n - 1;
    if (!leaf_ids.count(id)) m.unplaced_views += n;
  }
  for (const auto& [id, n] : leaf_ids) m.duplicate_ids += n - 1;

  for (const auto& v : spec.views) {
    for (const auto& c : v.charts) {
      if (c.chart_type == ChartType::SciVis) m.scivis_or_panel_present = true;
    }
    if (v.analysis_task == AnalysisTask::Comparison && v.charts.size() > 1) {
      for (const auto& c : v.charts) {
        if (c.chart_type != v.charts.front().chart_type) m.comparison_type_consistent = false;
      }
    }
  }
  m.palette_kind_consistent =
      !spec.style.palette.colors.empty() && spec.style.palette.kind == stylization::required_palette_kind(spec.views);
  return m;
}

Verdict evaluate(const FeatureMetrics& m, const std::vector<Rule>& table) {
  Verdict v;
  for (const auto& rule : table) {
    if (!rule.enabled) continue;
    bool failed = false;
    std::string value;
    if (rule.id == "layout-depth") {
      failed = m.layout_depth > 2;
      value = std::to_string(m.layout_depth);
    } else if (rule.id == "level1-count") {
      failed = m.level1_count < 1 || m.level1_count > 4;
      value = std::to_string(m.level1_count);
    } else if (rule.id == "view-count") {
      failed = m.view_count < 1 || m.view_count > 12;
      value = std::to_string(m.view_count);
    } else if (rule.id == "unplaced-views") {
      failed = m.unplaced_views > 0;
      value = std::to_string(m.unplaced_views);
    } else if (rule.id == "duplicate-ids") {
      failed = m.duplicate_ids > 0;
      value = std::to_string(m.duplicate_ids);
    } else if (rule.id == "excluded-view-type") {
      failed = m.scivis_or_panel_present;
    } else if (rule.id == "palette-kind") {
      failed = !m.palette_kind_consistent;
    } else if (rule.id == "comparison-type") {
      failed = !m.comparison_type_consistent;
    } else if (rule.id == "fraction-sums") {
      failed = !m.fraction_sums_ok;
    } else {
      throw ConfigError("evaluator rule '" + rule.id + "' has no check");
    }
    if (failed) v.violations.push_back({rule.id, rule.path, expand(rule.message, value)});
  }
  v.passed = v.violations.empty();
  return v;
}

}  // namespace dashgen::evaluator
