#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "dashgen/dsl/types.hpp"
#include "json.hpp"

namespace dashgen::dsl {

// Rule ids reported by validate(); schema-level failures use "schema".
inline constexpr std::string_view kRuleViewsNonEmpty = "views-non-empty";
inline constexpr std::string_view kRuleDuplicateViewId = "duplicate-view-id";
inline constexpr std::string_view kRuleDanglingViewRef = "dangling-view-ref";
inline constexpr std::string_view kRuleViewPlacement = "view-placement";
inline constexpr std::string_view kRuleImportancePositive = "importance-positive";
inline constexpr std::string_view kRuleChartsNonEmpty = "charts-non-empty";
inline constexpr std::string_view kRuleEncodingFieldExists = "encoding-field-exists";
inline constexpr std::string_view kRuleRowArity = "row-arity";
inline constexpr std::string_view kRuleCellKind = "cell-kind";

/// All semantic rule ids, in the order validate() checks them.
const std::vector<std::string_view>& semantic_rules();

/// The bundled machine-readable schema for `.dash.json` documents.
const nlohmann::json& document_schema();

/// Parses and fully validates a document.
/// Throws SyntaxError (malformed JSON, with line/column) or ValidationError
/// (schema or semantic rule failure, with path and rule id).
DashboardSpec parse_spec(std::string_view document);

/// Parses a document that satisfies the schema but skips semantic rules, so
/// that structurally broken prototypes can still be inspected.
DashboardSpec parse_spec_unchecked(std::string_view document);

/// Semantic invariants of the domain types. Empty means valid.
std::vector<Violation> validate(const DashboardSpec& spec);

/// Canonical bytes: sorted keys, shortest round-trip numbers, two-space
/// indentation, trailing newline.
std::string serialize_spec(const DashboardSpec& spec);

// JSON conversions shared by the patch wire format and the service.
nlohmann::json to_json(const DashboardSpec& spec);
nlohmann::json to_json(const ViewSpec& view);
nlohmann::json to_json(const ChartSpec& chart);
nlohmann::json to_json(const SimulatedDataset& dataset);
nlohmann::json to_json(const StyleSpec& style);
nlohmann::json to_json(const Palette& palette);
nlohmann::json to_json(const EmbellishmentSpec& e);
nlohmann::json to_json(const LayoutTree& layout);
nlohmann::json to_json(const LayoutNode& node);
nlohmann::json to_json(Rgb c);

/// The from_json family assumes schema-conforming input; shape errors
/// surface as ValidationError with rule "schema".
DashboardSpec spec_from_json(const nlohmann::json& j);
ViewSpec view_from_json(const nlohmann::json& j);
ChartSpec chart_from_json(const nlohmann::json& j);
SimulatedDataset dataset_from_json(const nlohmann::json& j);
StyleSpec style_from_json(const nlohmann::json& j);
Palette palette_from_json(const nlohmann::json& j);
EmbellishmentSpec embellishment_from_json(const nlohmann::json& j);
LayoutTree layout_from_json(const nlohmann::json& j);
LayoutNode layout_node_from_json(const nlohmann::json& j);
Rgb rgb_from_json(const nlohmann::json& j);

/// Validates a JSON fragment against a named definition of the document
/// schema (e.g. "view", "layout", "style").
std::vector<Violation> validate_fragment(const nlohmann::json& j, std::string_view definition,
                                         const std::string& path);

// --- Patches -------------------------------------------------------------

enum class PatchOp {
  AddView, DeleteView, ReplaceChartType, EditTitle, EditDatasetField, ReplaceLayout, ReplaceStyle
};

/// A targeted edit. Targets are slash paths:
///   AddView            "views"                              payload: view
///   DeleteView         "views/<id>"                         payload: null
///   ReplaceChartType   "views/<id>/charts/<i>"              payload: "Line"
///   EditTitle          "views/<id>" or "title"              payload: "text"
///   EditDatasetField   "views/<id>/charts/<i>/fields/<f>"   payload: {"name", "unit"?}
///   ReplaceLayout      "layout"                             payload: layout
///   ReplaceStyle       "style"                              payload: style
struct SpecPatch {
  PatchOp operation = PatchOp::EditTitle;
  std::string target;
  nlohmann::json payload;

  bool operator==(const SpecPatch&) const = default;
};

nlohmann::json to_json(const SpecPatch& patch);
SpecPatch patch_from_json(const nlohmann::json& j);

/// Applies `patch` and returns the edited spec; the input is untouched.
/// Throws TargetNotFound, InvariantViolation (result would break a rule), or
/// ValidationError (malformed payload).
DashboardSpec apply_patch(const DashboardSpec& spec, const SpecPatch& patch);

}  // namespace dashgen::dsl

namespace dashgen {
template <>
struct EnumTraits<dsl::PatchOp> {
  static constexpr std::array names{"AddView",  "DeleteView",       "ReplaceChartType",
                                    "EditTitle", "EditDatasetField", "ReplaceLayout",
                                    "ReplaceStyle"};
};
}  // namespace dashgen
