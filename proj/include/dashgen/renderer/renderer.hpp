#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dashgen/assembly/assembly.hpp"
#include "dashgen/dsl/types.hpp"

namespace dashgen::renderer {

struct RenderConfig {
  int banner_height = 64;
  std::string background;
  std::string banner_fill;
  std::string panel_fill;
  std::string text_color;
  std::string muted_text_color;
  std::string neutral_fill;
  double view_padding = 10;
  double view_title_height = 26;
  double chart_gap = 8;
  double chart_margin = 8;
  std::size_t table_max_rows = 8;
  double table_row_height = 22;
  std::map<ChartType, std::pair<double, double>> min_slot;  // width, height

  static const RenderConfig& shipped();
};

struct RenderedPrototype {
  int width = 0;
  int height = 0;
  std::string document;
  std::uint64_t content_hash = 0;

  std::string hash_hex() const;
};

/// FNV-1a over the document bytes.
std::uint64_t content_hash(const std::string& document);

/// Deterministic fragment for one chart inside `slot` (pixels). `color_index`
/// offsets the palette for single-series charts. Throws SlotTooSmall when the
/// slot is below the chart type's minimum.
std::string render_chart(const ChartSpec& chart, const assembly::Rect& slot, const Palette& palette,
                         std::size_t color_index = 0);

/// Screen minus the title banner.
assembly::Rect content_region(const ScreenSize& screen);

/// View rectangles as rendered: the layout snapped to the reference grid
/// over the content region.
std::vector<assembly::PlacedView> view_rects(const DashboardSpec& spec);

/// Pixel slots of a view's charts inside its rectangle, in chart order.
std::vector<assembly::Rect> chart_slots(const ViewSpec& view, const assembly::Rect& view_rect);

/// Runs the evaluator first and throws EvaluationRequired when the spec
/// fails it. Charts whose slot is below the minimum are drawn as a labelled
/// placeholder.
RenderedPrototype render_dashboard(const DashboardSpec& spec);

struct Thumbnail {
  double width = 0;
  double height = 0;
  std::string svg;
};

/// Uniform scale so the longer edge equals `max_edge`. Throws
/// InvariantViolation for a non-positive edge or an empty prototype.
Thumbnail render_thumbnail(const RenderedPrototype& prototype, double max_edge);

/// Rewrites every start tag with its attributes sorted by key.
std::string canonicalize_attributes(std::string_view svg);

}  // namespace dashgen::renderer
