#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "dashgen/dsl/types.hpp"
#include "dashgen/provider/provider.hpp"
#include "json.hpp"

namespace dashgen::composition {

struct FieldRequirement {
  std::string name;
  FieldKind kind = FieldKind::Dimension;
  std::optional<std::string> unit;
  bool primary = false;  // temporal: the x axis; measure: the headline value

  bool operator==(const FieldRequirement&) const = default;
};

/// One view the user asked for, before chart selection.
struct DisplayTask {
  std::string title;
  AnalysisTask analysis_task = AnalysisTask::Overview;
  std::vector<FieldRequirement> fields;
  bool emphasis = false;       // key metric
  bool part_of_whole = false;  // shares of a total
  std::optional<int> categories;
  std::optional<ChartType> preferred_chart;

  bool operator==(const DisplayTask&) const = default;
};

nlohmann::json to_json(const DisplayTask& task);
/// Throws ValidationError.
DisplayTask display_task_from_json(const nlohmann::json& j);
std::vector<Violation> validate_display_task(const DisplayTask& task);

enum class MeasureShape { Trend, Seasonal, Uniform, Pareto };

struct SimulationProfile {
  std::uint64_t seed = 0;
  std::string domain = "generic";
  std::optional<MeasureShape> shape;  // overrides the per-field choice
};

struct Decomposition {
  std::vector<DisplayTask> tasks;
  std::string title;
  std::string domain;
  std::vector<std::string> diagnostics;
};

/// CreateViews payload -> display tasks. Explicit "views" are used as-is;
/// otherwise the provider answers on stage "decompose" (one re-prompt on an
/// invalid answer). More than 12 tasks are truncated with a diagnostic.
/// Throws ProviderError, UnparsableIntent.
Decomposition decompose(const nlohmann::json& payload, const provider::Provider& provider,
                        const std::vector<std::string>& knowledge = {});

struct ChartChoice {
  ChartType chart = ChartType::Bar;
  std::string rule;                       // id of the matching rule
  std::optional<std::string> diagnostic;  // set when no rule applied
};

/// First matching row of chart_rules.json; a preferred chart wins.
ChartChoice choose_chart(const DisplayTask& task);
ChartType select_chart_type(const DisplayTask& task);

bool is_geographic(std::string_view field_name);
std::pair<int, int> row_bounds(ChartType chart);
/// Values of the vocabulary pool a dimension draws from.
std::vector<std::string> vocabulary_pool(std::string_view domain, std::string_view field_name);
MeasureShape default_shape(const DisplayTask& task, std::size_t measure_index);

/// Deterministic in (task, chart, profile.seed, profile.domain).
SimulatedDataset simulate_data(const DisplayTask& task, ChartType chart, const SimulationProfile& profile);

/// Throws EncodingImpossible.
ChartSpec map_encodings(const DisplayTask& task, ChartType chart, const SimulatedDataset& dataset);

/// Selected chart plus the small-multiple siblings the analysis task calls for.
std::vector<ChartSpec> compose_charts(const DisplayTask& task, const SimulationProfile& profile);

double view_importance(const DisplayTask& task, std::size_t chart_count);

/// Builds a complete view with the given id.
ViewSpec compose_view(const DisplayTask& task, std::string id, const SimulationProfile& profile);

}  // namespace dashgen::composition
