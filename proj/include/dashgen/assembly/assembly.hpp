#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "dashgen/dsl/types.hpp"

namespace dashgen::assembly {

struct Rect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool operator==(const Rect&) const = default;
};

double intersection_area(const Rect& a, const Rect& b);

/// rows x cols equal cells over the screen, indexed row-major.
struct ReferenceGrid {
  int rows = 12;
  int cols = 12;
  ScreenSize screen;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  Rect cell(std::size_t k) const;
};

/// p[k] = area(view ∩ S_k) / area(S_k).
struct OverlapProfile {
  std::string view_id;
  std::vector<double> p;

  double sum() const;
};

/// Throws OutOfBounds for rectangles leaving the screen or with negative size.
OverlapProfile compute_overlap_profile(const Rect& rect, const ReferenceGrid& grid, std::string view_id = {});

/// node -> views it holds.
using Grouping = std::map<std::string, std::vector<std::string>>;

/// Template path: importance(node) = sum over its views of sum_k p_k.
/// Throws EmptyNode, InvariantViolation (view missing or assigned twice).
std::map<std::string, double> compute_importance(const std::map<std::string, OverlapProfile>& profiles,
                                                 const Grouping& grouping);
/// Generation path: importance(node) = sum of the views' weights.
std::map<std::string, double> compute_importance(const std::map<std::string, double>& weights,
                                                 const Grouping& grouping);

inline constexpr double kColumnAspect = 1.4;

/// aspect >= 1.4 -> Column (side by side), otherwise Row.
Orientation choose_orientation(const std::vector<double>& level1_importance, double aspect);
/// Axis along which the profiles' centroids spread more (normalized by the
/// screen extent); x spread -> Column. Ties go to Column.
Orientation choose_orientation(const std::vector<OverlapProfile>& profiles, const ReferenceGrid& grid);

/// Index of the largest importance, first one on ties.
std::size_t representative_view(const std::vector<ViewSpec>& views);

/// Generation path when `layout_template` is empty, otherwise template slots
/// are filled in importance order. Throws TooManyViews, InvariantViolation
/// (no views).
LayoutTree build_layout_tree(const std::vector<ViewSpec>& views,
                             const std::optional<LayoutTree>& layout_template = std::nullopt,
                             ScreenSize screen = {});

/// Shipped layout templates (ids "template_1" ...). Throws UnknownTemplate.
LayoutTree load_template(const std::string& id);
std::vector<std::string> template_ids();

struct PlacedView {
  std::string view_id;
  Rect rect;
};

/// Exact rectangles; siblings share cumulative boundaries, so neighbours
/// meet without gaps.
std::vector<PlacedView> realize(const LayoutTree& tree, const Rect& region);
std::vector<PlacedView> realize(const LayoutTree& tree);

/// Fractions snapped to the reference grid: each group splits its span of
/// grid units by largest remainder (at least one unit per child) and unit i
/// sits at pixel floor(i * extent / units). Integer coordinates.
std::vector<PlacedView> realize_snapped(const LayoutTree& tree, const Rect& region, int grid_cols = 12,
                                        int grid_rows = 12);

/// Largest-remainder split of `units` in proportion to `fractions`, with at
/// least one unit each when units allow it.
std::vector<int> apportion(const std::vector<double>& fractions, int units);

/// Leaf depth: 1 when the root's children are all leaves.
int tree_depth(const LayoutNode& root);

struct ChartSlot {
  std::size_t chart_index = 0;
  Rect rect;  // in unit coordinates of the view's content box
  std::size_t color_index = 0;
};

struct SmallMultipleArrangement {
  Orientation orientation = Orientation::Column;
  std::vector<ChartSlot> slots;
};

inline constexpr double kHighlightShare = 0.6;
inline constexpr double kDecompositionShare = 0.55;

/// Chart slots for one view. aspect < 1 stacks slots vertically.
/// Throws RuleViolation (Comparison with mixed types, Highlight without a
/// number/gauge lead chart, Decomposition detail of the primary's type).
SmallMultipleArrangement compose_small_multiple(const ViewSpec& view, double aspect = 16.0 / 9.0);

}  // namespace dashgen::assembly
