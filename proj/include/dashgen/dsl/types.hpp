#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace dashgen {

enum class AnalysisTask { Comparison, Highlight, Overview, Decomposition };

/// The 13 non-Panel view types. SciVis is accepted by the parser but the
/// generator never emits it.
enum class ChartType {
  Bar, Line, Point, Area, Pie, Map, Matrix, Table, Text, Diagram, Circle, Glyph, SciVis
};

enum class Channel { X, Y, Color, Size, Label, Value };
enum class FieldKind { Dimension, Measure, Temporal };
enum class PaletteKind { Categorical, Sequential };
enum class EmbellishmentKind { Border, Divider, Icon };
enum class NodeKind { Group, Leaf };

/// Row: children stacked top to bottom. Column: children side by side.
enum class Orientation { Row, Column };

template <typename E>
struct EnumTraits;

#define DASHGEN_ENUM_NAMES(Enum, ...)                                         \
  template <>                                                                 \
  struct EnumTraits<Enum> {                                                   \
    static constexpr std::array names{__VA_ARGS__};                           \
  }

DASHGEN_ENUM_NAMES(AnalysisTask, "Comparison", "Highlight", "Overview", "Decomposition");
DASHGEN_ENUM_NAMES(ChartType, "Bar", "Line", "Point", "Area", "Pie", "Map", "Matrix", "Table",
                   "Text", "Diagram", "Circle", "Glyph", "SciVis");
DASHGEN_ENUM_NAMES(Channel, "x", "y", "color", "size", "label", "value");
DASHGEN_ENUM_NAMES(FieldKind, "dimension", "measure", "temporal");
DASHGEN_ENUM_NAMES(PaletteKind, "Categorical", "Sequential");
DASHGEN_ENUM_NAMES(EmbellishmentKind, "Border", "Divider", "Icon");
DASHGEN_ENUM_NAMES(NodeKind, "Group", "Leaf");
DASHGEN_ENUM_NAMES(Orientation, "Row", "Column");

#undef DASHGEN_ENUM_NAMES

template <typename E>
constexpr std::string_view enum_name(E value) {
  return EnumTraits<E>::names[static_cast<std::size_t>(value)];
}

template <typename E>
constexpr std::optional<E> enum_from(std::string_view name) {
  const auto& names = EnumTraits<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <typename E>
constexpr std::size_t enum_count() {
  return EnumTraits<E>::names.size();
}

template <typename E>
constexpr std::array<E, EnumTraits<E>::names.size()> enum_values() {
  std::array<E, EnumTraits<E>::names.size()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<E>(i);
  return out;
}

constexpr Orientation orthogonal(Orientation o) {
  return o == Orientation::Row ? Orientation::Column : Orientation::Row;
}

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// "#rrggbb"
std::string to_hex(Rgb c);

struct ScreenSize {
  int width = 1920;
  int height = 1080;

  double aspect() const { return static_cast<double>(width) / height; }
  bool operator==(const ScreenSize&) const = default;
};

struct Field {
  std::string name;
  FieldKind kind = FieldKind::Dimension;
  std::optional<std::string> unit;

  bool operator==(const Field&) const = default;
};

/// Measures hold numbers; dimensions and ISO-8601 temporals hold text.
using Cell = std::variant<double, std::string>;

struct SimulatedDataset {
  std::vector<Field> fields;
  std::vector<std::vector<Cell>> rows;

  const Field* field(std::string_view name) const;
  std::optional<std::size_t> field_index(std::string_view name) const;

  bool operator==(const SimulatedDataset&) const = default;
};

struct ChartSpec {
  ChartType chart_type = ChartType::Bar;
  std::map<Channel, std::string> encoding;
  SimulatedDataset dataset;

  bool operator==(const ChartSpec&) const = default;
};

struct ViewSpec {
  std::string id;
  std::string title;
  AnalysisTask analysis_task = AnalysisTask::Overview;
  double importance = 1.0;
  std::vector<ChartSpec> charts;

  bool is_small_multiple() const { return charts.size() > 1; }
  bool operator==(const ViewSpec&) const = default;
};

struct Palette {
  PaletteKind kind = PaletteKind::Categorical;
  std::string name;
  std::vector<Rgb> colors;

  bool operator==(const Palette&) const = default;
};

struct EmbellishmentSpec {
  EmbellishmentKind kind = EmbellishmentKind::Border;
  Rgb theme_color;
  std::string corner_style = "square";
  std::vector<double> stroke_widths;
  std::optional<std::string> glyph_id;
  std::string prompt_text;

  bool operator==(const EmbellishmentSpec&) const = default;
};

struct StyleSpec {
  Rgb theme_color;
  Palette palette;
  std::vector<EmbellishmentSpec> embellishments;

  bool operator==(const StyleSpec&) const = default;
};

struct LayoutNode {
  NodeKind kind = NodeKind::Leaf;
  std::optional<Orientation> orientation;  // Group only
  double fraction = 1.0;
  std::vector<LayoutNode> children;        // Group only
  std::string view_id;                     // Leaf only

  static LayoutNode leaf(std::string view_id, double fraction) {
    LayoutNode n;
    n.kind = NodeKind::Leaf;
    n.fraction = fraction;
    n.view_id = std::move(view_id);
    return n;
  }

  static LayoutNode group(Orientation orientation, double fraction,
                          std::vector<LayoutNode> children) {
    LayoutNode n;
    n.kind = NodeKind::Group;
    n.orientation = orientation;
    n.fraction = fraction;
    n.children = std::move(children);
    return n;
  }

  bool is_leaf() const { return kind == NodeKind::Leaf; }
  bool operator==(const LayoutNode&) const = default;
};

struct LayoutTree {
  LayoutNode root = LayoutNode::group(Orientation::Column, 1.0, {});
  ScreenSize screen;

  /// Leaf view ids in depth-first order.
  std::vector<std::string> leaf_ids() const;
  bool operator==(const LayoutTree&) const = default;
};

/// The abstract prototype and root document of the DSL.
struct DashboardSpec {
  int schema_version = 1;
  std::string title;
  std::string domain;
  StyleSpec style;
  std::vector<ViewSpec> views;
  LayoutTree layout;

  const ViewSpec* find_view(std::string_view id) const;
  ViewSpec* find_view(std::string_view id);

  bool operator==(const DashboardSpec&) const = default;
};

inline constexpr int kSchemaVersion = 1;

}  // namespace dashgen
