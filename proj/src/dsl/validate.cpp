#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "dashgen/dsl/dsl.hpp"

namespace dashgen::dsl {

namespace {

bool is_iso_date(const std::string& s) {
  static const std::regex re(
      R"(^(\d{4})-(\d{2})-(\d{2})(T\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:\d{2})?)?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) return false;
  const int month = std::stoi(m[2]);
  const int day = std::stoi(m[3]);
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return day <= kDays[month - 1];
}

std::string view_path(std::size_t i) { return "views[" + std::to_string(i) + "]"; }

void walk_leaves(const LayoutNode& node, const std::string& path,
                 std::vector<std::pair<std::string, std::string>>& leaves) {
  if (node.is_leaf()) {
    leaves.emplace_back(node.view_id, path);
    return;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    walk_leaves(node.children[i], path + ".children[" + std::to_string(i) + "]", leaves);
  }
}

void check_dataset(const SimulatedDataset& d, const std::string& path, std::vector<Violation>& out) {
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    const auto& row = d.rows[r];
    const std::string row_path = path + ".rows[" + std::to_string(r) + "]";
    if (row.size() != d.fields.size()) {
      out.push_back({std::string(kRuleRowArity), row_path,
                     "row has " + std::to_string(row.size()) + " cells, expected " +
                         std::to_string(d.fields.size())});
      continue;
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& cell = row[c];
      const auto& field = d.fields[c];
      const std::string cell_path = row_path + "[" + std::to_string(c) + "]";
      switch (field.kind) {
        case FieldKind::Measure: {
          const auto* num = std::get_if<double>(&cell);
          if (num == nullptr || !std::isfinite(*num)) {
            out.push_back({std::string(kRuleCellKind), cell_path,
                           "measure '" + field.name + "' requires a finite number"});
          }
          break;
        }
        case FieldKind::Temporal: {
          const auto* str = std::get_if<std::string>(&cell);
          if (str == nullptr || !is_iso_date(*str)) {
            out.push_back({std::string(kRuleCellKind), cell_path,
                           "temporal '" + field.name + "' requires an ISO-8601 date"});
          }
          break;
        }
        case FieldKind::Dimension:
          if (!std::holds_alternative<std::string>(cell)) {
            out.push_back({std::string(kRuleCellKind), cell_path,
                           "dimension '" + field.name + "' requires text"});
          }
          break;
      }
    }
  }
}

}  // namespace

const std::vector<std::string_view>& semantic_rules() {
  static const std::vector<std::string_view> rules = {
      kRuleViewsNonEmpty,     kRuleDuplicateViewId,     kRuleDanglingViewRef,
      kRuleViewPlacement,     kRuleImportancePositive,  kRuleChartsNonEmpty,
      kRuleEncodingFieldExists, kRuleRowArity,          kRuleCellKind};
  return rules;
}

std::vector<Violation> validate(const DashboardSpec& spec) {
  std::vector<Violation> out;

  if (spec.views.empty()) {
    out.push_back({std::string(kRuleViewsNonEmpty), "views", "a dashboard needs at least one view"});
  }

  std::map<std::string, std::size_t> first_index;
  for (std::size_t i = 0; i < spec.views.size(); ++i) {
    const auto& id = spec.views[i].id;
    if (!first_index.emplace(id, i).second) {
      out.push_back({std::string(kRuleDuplicateViewId), view_path(i) + ".id",
                     "view id '" + id + "' already used by " + view_path(first_index[id])});
    }
  }

  std::vector<std::pair<std::string, std::string>> leaves;
  walk_leaves(spec.layout.root, "layout.root", leaves);
  std::map<std::string, int> placements;
  for (const auto& [id, path] : leaves) {
    if (!first_index.contains(id)) {
      out.push_back({std::string(kRuleDanglingViewRef), path,
                     "layout references unknown view '" + id + "'"});
    }
    ++placements[id];
  }
  for (std::size_t i = 0; i < spec.views.size(); ++i) {
    const auto& id = spec.views[i].id;
    if (first_index[id] != i) continue;
    const int n = placements.contains(id) ? placements[id] : 0;
    if (n != 1) {
      out.push_back({std::string(kRuleViewPlacement), view_path(i),
                     "view '" + id + "' appears in " + std::to_string(n) +
                         " layout leaves, expected exactly 1"});
    }
  }

  for (std::size_t i = 0; i < spec.views.size(); ++i) {
    const auto& v = spec.views[i];
    if (!(v.importance > 0.0) || !std::isfinite(v.importance)) {
      out.push_back({std::string(kRuleImportancePositive), view_path(i) + ".importance",
                     "importance must be a positive finite weight"});
    }
    if (v.charts.empty()) {
      out.push_back({std::string(kRuleChartsNonEmpty), view_path(i) + ".charts",
                     "a view needs at least one chart"});
    }
    for (std::size_t c = 0; c < v.charts.size(); ++c) {
      const auto& chart = v.charts[c];
      const std::string chart_path = view_path(i) + ".charts[" + std::to_string(c) + "]";
      for (const auto& [channel, field] : chart.encoding) {
        if (chart.dataset.field(field) == nullptr) {
          out.push_back({std::string(kRuleEncodingFieldExists),
                         chart_path + ".encoding." + std::string(enum_name(channel)),
                         "encoded field '" + field + "' is not in the dataset"});
        }
      }
      check_dataset(chart.dataset, chart_path + ".dataset", out);
    }
  }
  return out;
}

}  // namespace dashgen::dsl
