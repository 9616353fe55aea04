#pragma once

#include <string>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "dashgen/dsl/types.hpp"
#include "json.hpp"

namespace dashgen::evaluator {

struct FeatureMetrics {
  std::size_t view_count = 0;
  int layout_depth = 0;  // 1 when the root's children are all leaves
  std::size_t level1_count = 0;
  std::size_t unplaced_views = 0;
  std::size_t duplicate_ids = 0;
  bool scivis_or_panel_present = false;
  bool palette_kind_consistent = true;
  bool comparison_type_consistent = true;
  bool fraction_sums_ok = true;

  bool operator==(const FeatureMetrics&) const = default;
};

nlohmann::json to_json(const FeatureMetrics& m);

struct Verdict {
  bool passed = true;
  std::vector<Violation> violations;
};

nlohmann::json to_json(const Verdict& v);

struct Rule {
  std::string id;
  std::string path;
  std::string message;  // "{value}" expands to the offending metric
  bool enabled = true;
};

/// Shipped rule table, in evaluation order.
const std::vector<Rule>& rules();

/// Works on specs that parse but may break semantic rules.
FeatureMetrics extract_metrics(const DashboardSpec& spec);

Verdict evaluate(const FeatureMetrics& metrics, const std::vector<Rule>& table = rules());

inline Verdict evaluate(const DashboardSpec& spec) { return evaluate(extract_metrics(spec)); }

}  // namespace dashgen::evaluator
