#include <cmath>

#include "dashgen/common/json_schema.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"
#include "dashgen/dsl/dsl.hpp"

namespace dashgen::dsl {

using nlohmann::json;

namespace {

template <typename E>
E enum_at(const json& j, const char* key) {
  const auto& raw = j.at(key).get_ref<const std::string&>();
  if (auto v = enum_from<E>(raw)) return *v;
  throw ValidationError({{"schema", key, "unknown value '" + raw + "'"}});
}

// Shape errors inside from_json (only reachable when the caller skipped the
// schema) are reported the same way as schema failures.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError({{"schema", "$", e.what()}});
  }
}

}  // namespace

json to_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from_json(const json& j) {
  return guarded([&] {
    Rgb c;
    c.r = static_cast<std::uint8_t>(j.at(0).get<int>());
    c.g = static_cast<std::uint8_t>(j.at(1).get<int>());
    c.b = static_cast<std::uint8_t>(j.at(2).get<int>());
    return c;
  });
}

json to_json(const SimulatedDataset& d) {
  json fields = json::array();
  for (const auto& f : d.fields) {
    json jf = {{"name", f.name}, {"kind", enum_name(f.kind)}};
    if (f.unit) jf["unit"] = *f.unit;
    fields.push_back(std::move(jf));
  }
  json rows = json::array();
  for (const auto& row : d.rows) {
    json jr = json::array();
    for (const auto& cell : row) {
      if (const auto* num = std::get_if<double>(&cell)) {
        jr.push_back(*num);
      } else {
        jr.push_back(std::get<std::string>(cell));
      }
    }
    rows.push_back(std::move(jr));
  }
  return {{"fields", std::move(fields)}, {"rows", std::move(rows)}};
}

SimulatedDataset dataset_from_json(const json& j) {
  return guarded([&] {
    SimulatedDataset d;
    for (const auto& jf : j.at("fields")) {
      Field f;
      f.name = jf.at("name").get<std::string>();
      f.kind = enum_at<FieldKind>(jf, "kind");
      if (jf.contains("unit")) f.unit = jf.at("unit").get<std::string>();
      d.fields.push_back(std::move(f));
    }
    for (const auto& jr : j.at("rows")) {
      std::vector<Cell> row;
      row.reserve(jr.size());
      for (const auto& cell : jr) {
        if (cell.is_number()) {
          row.emplace_back(cell.get<double>());
        } else {
          row.emplace_back(cell.get<std::string>());
        }
      }
      d.rows.push_back(std::move(row));
    }
    return d;
  });
}

json to_json(const ChartSpec& c) {
  json enc = json::object();
  for (const auto& [channel, field] : c.encoding) enc[std::string(enum_name(channel))] = field;
  return {{"chart_type", enum_name(c.chart_type)},
          {"encoding", std::move(enc)},
          {"dataset", to_json(c.dataset)}};
}

ChartSpec chart_from_json(const json& j) {
  return guarded([&] {
    ChartSpec c;
    c.chart_type = enum_at<ChartType>(j, "chart_type");
    for (const auto& [key, value] : j.at("encoding").items()) {
      auto channel = enum_from<Channel>(key);
      if (!channel) throw ValidationError({{"schema", "encoding." + key, "unknown channel"}});
      c.encoding[*channel] = value.get<std::string>();
    }
    c.dataset = dataset_from_json(j.at("dataset"));
    return c;
  });
}

json to_json(const ViewSpec& v) {
  json charts = json::array();
  for (const auto& c : v.charts) charts.push_back(to_json(c));
  return {{"id", v.id},
          {"title", v.title},
          {"analysis_task", enum_name(v.analysis_task)},
          {"importance", v.importance},
          {"charts", std::move(charts)}};
}

ViewSpec view_from_json(const json& j) {
  return guarded([&] {
    ViewSpec v;
    v.id = j.at("id").get<std::string>();
    v.title = j.at("title").get<std::string>();
    v.analysis_task = enum_at<AnalysisTask>(j, "analysis_task");
    v.importance = j.at("importance").get<double>();
    for (const auto& c : j.at("charts")) v.charts.push_back(chart_from_json(c));
    return v;
  });
}

json to_json(const Palette& p) {
  json colors = json::array();
  for (const auto& c : p.colors) colors.push_back(to_json(c));
  return {{"kind", enum_name(p.kind)}, {"name", p.name}, {"colors", std::move(colors)}};
}

Palette palette_from_json(const json& j) {
  return guarded([&] {
    Palette p;
    p.kind = enum_at<PaletteKind>(j, "kind");
    p.name = j.at("name").get<std::string>();
    for (const auto& c : j.at("colors")) p.colors.push_back(rgb_from_json(c));
    return p;
  });
}

json to_json(const EmbellishmentSpec& e) {
  json j = {{"kind", enum_name(e.kind)},
            {"theme_color", to_json(e.theme_color)},
            {"corner_style", e.corner_style},
            {"stroke_widths", e.stroke_widths},
            {"prompt_text", e.prompt_text}};
  if (e.glyph_id) j["glyph"] = *e.glyph_id;
  return j;
}

EmbellishmentSpec embellishment_from_json(const json& j) {
  return guarded([&] {
    EmbellishmentSpec e;
    e.kind = enum_at<EmbellishmentKind>(j, "kind");
    e.theme_color = rgb_from_json(j.at("theme_color"));
    e.corner_style = j.at("corner_style").get<std::string>();
    e.stroke_widths = j.at("stroke_widths").get<std::vector<double>>();
    if (j.contains("glyph")) e.glyph_id = j.at("glyph").get<std::string>();
    e.prompt_text = j.at("prompt_text").get<std::string>();
    return e;
  });
}

json to_json(const StyleSpec& s) {
  json embellishments = json::array();
  for (const auto& e : s.embellishments) embellishments.push_back(to_json(e));
  return {{"theme_color", to_json(s.theme_color)},
          {"palette", to_json(s.palette)},
          {"embellishments", std::move(embellishments)}};
}

StyleSpec style_from_json(const json& j) {
  return guarded([&] {
    StyleSpec s;
    s.theme_color = rgb_from_json(j.at("theme_color"));
    s.palette = palette_from_json(j.at("palette"));
    for (const auto& e : j.at("embellishments")) s.embellishments.push_back(embellishment_from_json(e));
    return s;
  });
}

json to_json(const LayoutNode& n) {
  if (n.is_leaf()) {
    return {{"kind", "Leaf"}, {"fraction", n.fraction}, {"view_id", n.view_id}};
  }
  json children = json::array();
  for (const auto& c : n.children) children.push_back(to_json(c));
  return {{"kind", "Group"},
          {"orientation", enum_name(n.orientation.value_or(Orientation::Row))},
          {"fraction", n.fraction},
          {"children", std::move(children)}};
}

LayoutNode layout_node_from_json(const json& j) {
  return guarded([&] {
    const auto kind = enum_at<NodeKind>(j, "kind");
    const double fraction = j.at("fraction").get<double>();
    if (kind == NodeKind::Leaf) return LayoutNode::leaf(j.at("view_id").get<std::string>(), fraction);
    std::vector<LayoutNode> children;
    for (const auto& c : j.at("children")) children.push_back(layout_node_from_json(c));
    return LayoutNode::group(enum_at<Orientation>(j, "orientation"), fraction, std::move(children));
  });
}

json to_json(const LayoutTree& t) {
  return {{"screen", {{"width", t.screen.width}, {"height", t.screen.height}}},
          {"root", to_json(t.root)}};
}

LayoutTree layout_from_json(const json& j) {
  return guarded([&] {
    LayoutTree t;
    t.screen.width = j.at("screen").at("width").get<int>();
    t.screen.height = j.at("screen").at("height").get<int>();
    t.root = layout_node_from_json(j.at("root"));
    return t;
  });
}

json to_json(const DashboardSpec& s) {
  json views = json::array();
  for (const auto& v : s.views) views.push_back(to_json(v));
  return {{"schema_version", s.schema_version},
          {"title", s.title},
          {"domain", s.domain},
          {"style", to_json(s.style)},
          {"views", std::move(views)},
          {"layout", to_json(s.layout)}};
}

DashboardSpec spec_from_json(const json& j) {
  return guarded([&] {
    DashboardSpec s;
    s.schema_version = j.at("schema_version").get<int>();
    s.title = j.at("title").get<std::string>();
    s.domain = j.at("domain").get<std::string>();
    s.style = style_from_json(j.at("style"));
    for (const auto& v : j.at("views")) s.views.push_back(view_from_json(v));
    s.layout = layout_from_json(j.at("layout"));
    return s;
  });
}

const json& document_schema() { return resources::json("dash.schema.json"); }

std::vector<Violation> validate_fragment(const json& j, std::string_view definition,
                                         const std::string& path) {
  const auto& root = document_schema();
  // Wrap the definition so its internal $refs resolve against the full schema.
  json wrapper = root;
  wrapper.erase("required");
  wrapper.erase("properties");
  wrapper.erase("additionalProperties");
  wrapper.erase("type");
  wrapper["$ref"] = "#/definitions/" + std::string(definition);
  return schema::validate(j, wrapper, path);
}

namespace {

json parse_json(std::string_view document) {
  try {
    return json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    const auto offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, column] = line_column(document, offset);
    std::string message = e.what();
    if (auto pos = message.find("parse error"); pos != std::string::npos) message = message.substr(pos);
    throw SyntaxError(message, line, column);
  }
}

}  // namespace

DashboardSpec parse_spec_unchecked(std::string_view document) {
  const json j = parse_json(document);
  auto violations = schema::validate(j, document_schema(), "");
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return spec_from_json(j);
}

DashboardSpec parse_spec(std::string_view document) {
  auto spec = parse_spec_unchecked(document);
  auto violations = validate(spec);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return spec;
}

std::string serialize_spec(const DashboardSpec& spec) {
  return to_json(spec).dump(2) + "\n";
}

}  // namespace dashgen::dsl
