#include "dashgen/renderer/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"
#include "dashgen/evaluator/evaluator.hpp"
#include "dashgen/stylization/stylization.hpp"

namespace dashgen::renderer {

using assembly::Rect;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

std::string num(double v) { return format_decimal(v, 3); }

// Attribute list builder; canonical ordering happens once at the end.
class Tag {
 public:
  explicit Tag(std::string name) : s_("<" + std::move(name)) {}
  Tag& a(const char* key, const std::string& value) {
    s_ += std::string(" ") + key + "=\"" + xml_escape(value) + "\"";
    return *this;
  }
  Tag& a(const char* key, double value) { return a(key, num(value)); }
  Tag& a(const char* key, const char* value) { return a(key, std::string(value)); }
  std::string open() const { return s_ + ">"; }
  std::string empty() const { return s_ + "/>"; }

 private:
  std::string s_;
};

std::string rect(const Rect& r, const std::string& cls, const std::string& fill) {
  return Tag("rect").a("class", cls).a("x", r.x).a("y", r.y).a("width", r.w).a("height", r.h).a("fill", fill).empty();
}

std::string text(double x, double y, const std::string& content, double size, const std::string& fill,
                 const char* anchor = "start", const std::string& cls = "label") {
  return Tag("text").a("class", cls).a("x", x).a("y", y).a("font-size", size).a("fill", fill).a("text-anchor", anchor).open() +
         xml_escape(content) + "</text>";
}

std::string clip_text(const std::string& s, double width, double font_size) {
  const auto max_chars = static_cast<std::size_t>(std::max(0.0, width / (font_size * 0.6)));
  if (s.size() <= max_chars) return s;
  if (max_chars <= 1) return "";
  return s.substr(0, max_chars - 1) + ".";
}

Rect inset(const Rect& r, double d) {
  return {r.x + d, r.y + d, std::max(0.0, r.w - 2 * d), std::max(0.0, r.h - 2 * d)};
}

double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

std::pair<double, double> polar(double cx, double cy, double r, double deg) {
  const double t = deg * kPi / 180.0;
  return {cx + r * std::cos(t), cy + r * std::sin(t)};
}

// Clockwise arc in screen coordinates (degrees from +x, y down).
std::string arc_path(double cx, double cy, double r, double from, double sweep) {
  if (sweep >= 360.0) {
    auto [x0, y0] = polar(cx, cy, r, from);
    auto [x1, y1] = polar(cx, cy, r, from + 180);
    return "M" + num(x0) + " " + num(y0) + "A" + num(r) + " " + num(r) + " 0 1 1 " + num(x1) + " " + num(y1) + "A" +
           num(r) + " " + num(r) + " 0 1 1 " + num(x0) + " " + num(y0);
  }
  auto [x0, y0] = polar(cx, cy, r, from);
  auto [x1, y1] = polar(cx, cy, r, from + sweep);
  return "M" + num(x0) + " " + num(y0) + "A" + num(r) + " " + num(r) + " 0 " + (sweep > 180 ? "1" : "0") + " 1 " +
         num(x1) + " " + num(y1);
}

// --- data access ----------------------------------------------------------------

std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return format_decimal(std::get<double>(c), 2);
}

double cell_number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return kNaN;
}

std::optional<std::size_t> channel_field(const ChartSpec& c, Channel ch) {
  auto it = c.encoding.find(ch);
  if (it == c.encoding.end()) return std::nullopt;
  return c.dataset.field_index(it->second);
}

bool is_measure(const ChartSpec& c, std::size_t i) { return c.dataset.fields[i].kind == FieldKind::Measure; }

std::optional<std::size_t> category_field(const ChartSpec& c) {
  for (auto ch : {Channel::X, Channel::Label}) {
    if (auto i = channel_field(c, ch); i && !is_measure(c, *i)) return i;
  }
  for (std::size_t i = 0; i < c.dataset.fields.size(); ++i) {
    if (!is_measure(c, i)) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> measure_fields(const ChartSpec& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.dataset.fields.size(); ++i) {
    if (is_measure(c, i)) out.push_back(i);
  }
  return out;
}

std::optional<std::size_t> value_field(const ChartSpec& c) {
  for (auto ch : {Channel::Y, Channel::Value, Channel::Color, Channel::Size}) {
    if (auto i = channel_field(c, ch); i && is_measure(c, *i)) return i;
  }
  auto m = measure_fields(c);
  if (m.empty()) return std::nullopt;
  return m.front();
}

struct Series {
  std::string name;
  std::vector<double> values;  // NaN where the category has no row
};

struct Table2 {
  std::vector<std::string> categories;
  std::vector<Series> series;
  bool color_by_category = false;
};

// Categories in first-appearance order, one series per distinct value of a
// color-encoded dimension other than the category.
Table2 tabulate(const ChartSpec& c) {
  Table2 t;
  const auto cat = category_field(c);
  const auto val = value_field(c);
  auto color = channel_field(c, Channel::Color);
  if (color && (is_measure(c, *color) || color == cat)) {
    t.color_by_category = color == cat;
    color.reset();
  }
  std::vector<std::string> series_names;
  auto index_of = [](std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(s);
    return v.size() - 1;
  };
  std::vector<std::tuple<std::size_t, std::size_t, double>> points;
  for (std::size_t r = 0; r < c.dataset.rows.size(); ++r) {
    const auto& row = c.dataset.rows[r];
    const auto ci = index_of(t.categories, cat ? cell_text(row[*cat]) : std::to_string(r + 1));
    const auto si = color ? index_of(series_names, cell_text(row[*color])) : 0;
    points.emplace_back(ci, si, val ? cell_number(row[*val]) : kNaN);
  }
  if (series_names.empty()) series_names.push_back(val ? c.dataset.fields[*val].name : "value");
  for (const auto& n : series_names) t.series.push_back({n, std::vector<double>(t.categories.size(), kNaN)});
  for (auto [ci, si, v] : points) {
    auto& slot = t.series[si].values[ci];
    slot = std::isnan(slot) ? v : slot + v;
  }
  return t;
}

std::pair<double, double> extent(const Table2& t, bool include_zero) {
  double lo = include_zero ? 0 : std::numeric_limits<double>::infinity();
  double hi = include_zero ? 0 : -std::numeric_limits<double>::infinity();
  for (const auto& s : t.series) {
    for (double v : s.values) {
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0, 1};
  if (hi == lo) return {lo - 1, hi + 1};
  return {lo, hi};
}

// --- color ramps ------------------------------------------------------------------

Rgb mix_lab(Rgb a, Rgb b, double t) {
  const auto la = stylization::srgb_to_lab(a);
  const auto lb = stylization::srgb_to_lab(b);
  return stylization::lab_to_srgb({la.L + (lb.L - la.L) * t, la.a + (lb.a - la.a) * t, la.b + (lb.b - la.b) * t});
}

// Sequential stops of the palette, or a two-stop ramp from the neutral fill
// to the chart color when the palette is categorical.
Rgb ramp(const Palette& palette, std::size_t color_index, double t) {
  t = clamp_to(t, 0, 1);
  if (palette.kind == PaletteKind::Sequential && palette.colors.size() >= 2) {
    const double pos = t * static_cast<double>(palette.colors.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), palette.colors.size() - 2);
    return mix_lab(palette.colors[i], palette.colors[i + 1], pos - static_cast<double>(i));
  }
  const auto neutral = stylization::parse_hex(RenderConfig::shipped().neutral_fill);
  return mix_lab(neutral, stylization::series_color(palette, color_index), t);
}

std::string color(const Palette& p, std::size_t i) { return to_hex(stylization::series_color(p, i)); }

// --- chart painters -------------------------------------------------------------

struct Ctx {
  const ChartSpec& chart;
  Rect plot;
  const Palette& palette;
  std::size_t color_index;
  const RenderConfig& cfg;
};

std::string paint_bar(const Ctx& c) {
  const auto t = tabulate(c.chart);
  const bool labels = c.plot.h >= 100;
  Rect plot = c.plot;
  if (labels) plot.h -= 14;
  const auto [lo, hi] = extent(t, true);
  auto y = [&](double v) { return clamp_to(plot.bottom() - (v - lo) / (hi - lo) * plot.h, plot.y, plot.bottom()); };
  const double group_w = plot.w / static_cast<double>(std::max<std::size_t>(1, t.categories.size()));
  const double bar_w = group_w * 0.7 / static_cast<double>(t.series.size());
  std::string s;
  for (std::size_t ci = 0; ci < t.categories.size(); ++ci) {
    const double gx = plot.x + group_w * static_cast<double>(ci) + group_w * 0.15;
    for (std::size_t si = 0; si < t.series.size(); ++si) {
      const double v = t.series[si].values[ci];
      if (std::isnan(v)) continue;
      const double top = std::min(y(v), y(0)), bottom = std::max(y(v), y(0));
      const auto fill = t.series.size() > 1       ? color(c.palette, c.color_index + si)
                        : t.color_by_category ? color(c.palette, c.color_index + ci)
                                              : color(c.palette, c.color_index);
      s += rect({gx + bar_w * static_cast<double>(si), top, bar_w, bottom - top}, "bar", fill);
    }
    if (labels) {
      s += text(gx + group_w * 0.35, plot.bottom() + 11, clip_text(t.categories[ci], group_w, 9), 9,
                c.cfg.muted_text_color, "middle");
    }
  }
  s += Tag("path").a("class", "axis").a("d", "M" + num(plot.x) + " " + num(y(0)) + "H" + num(plot.right()))
           .a("stroke", c.cfg.muted_text_color).a("stroke-width", 1).empty();
  return s;
}

std::string paint_line_area(const Ctx& c, bool area) {
  const auto t = tabulate(c.chart);
  const auto [lo, hi] = extent(t, area);
  const auto n = t.categories.size();
  auto x = [&](std::size_t i) {
    return n <= 1 ? c.plot.x + c.plot.w / 2 : c.plot.x + c.plot.w * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto y = [&](double v) { return clamp_to(c.plot.bottom() - (v - lo) / (hi - lo) * c.plot.h, c.plot.y, c.plot.bottom()); };
  std::string s;
  for (std::size_t si = 0; si < t.series.size(); ++si) {
    const auto stroke = color(c.palette, c.color_index + si);
    std::string d;
    std::optional<std::size_t> first, last;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = t.series[si].values[i];
      if (std::isnan(v)) continue;
      d += (first ? "L" : "M") + num(x(i)) + " " + num(y(v));
      if (!first) first = i;
      last = i;
    }
    if (!first) continue;
    if (area) {
      const std::string fill_d = d + "L" + num(x(*last)) + " " + num(y(lo)) + "L" + num(x(*first)) + " " + num(y(lo)) + "Z";
      s += Tag("path").a("class", "area").a("d", fill_d).a("fill", stroke).a("fill-opacity", 0.35).empty();
    }
    s += Tag("path").a("class", "line").a("d", d).a("fill", "none").a("stroke", stroke).a("stroke-width", 2).empty();
    if (n <= 12) {
      for (std::size_t i = 0; i < n; ++i) {
        const double v = t.series[si].values[i];
        if (std::isnan(v)) continue;
        s += Tag("circle").a("class", "dot").a("cx", x(i)).a("cy", y(v)).a("r", 2.5).a("fill", stroke).empty();
      }
    }
  }
  return s;
}

std::string paint_point(const Ctx& c) {
  const auto& ds = c.chart.dataset;
  auto xf = channel_field(c.chart, Channel::X);
  auto yf = channel_field(c.chart, Channel::Y);
  const auto measures = measure_fields(c.chart);
  if (!xf || !is_measure(c.chart, *xf)) xf = measures.empty() ? std::nullopt : std::optional(measures[0]);
  if (!yf || !is_measure(c.chart, *yf) || yf == xf) {
    yf.reset();
    for (auto m : measures) {
      if (m != xf) {
        yf = m;
        break;
      }
    }
  }
  auto sf = channel_field(c.chart, Channel::Size);
  if (sf && !is_measure(c.chart, *sf)) sf.reset();
  auto colf = channel_field(c.chart, Channel::Color);
  if (colf && is_measure(c.chart, *colf)) colf.reset();

  auto range = [&](std::optional<std::size_t> f) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t r = 0; r < ds.rows.size(); ++r) {
      const double v = f ? cell_number(ds.rows[r][*f]) : static_cast<double>(r);
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) return std::pair{0.0, 1.0};
    if (hi == lo) return std::pair{lo - 1, hi + 1};
    return std::pair{lo, hi};
  };
  const auto [x0, x1] = range(xf);
  const auto [y0, y1] = range(yf);
  const auto [s0, s1] = range(sf);
  const Rect p = inset(c.plot, 6);
  std::vector<std::string> groups;
  std::string s;
  for (std::size_t r = 0; r < ds.rows.size(); ++r) {
    const double xv = xf ? cell_number(ds.rows[r][*xf]) : static_cast<double>(r);
    const double yv = yf ? cell_number(ds.rows[r][*yf]) : static_cast<double>(r);
    if (std::isnan(xv) || std::isnan(yv)) continue;
    std::size_t g = 0;
    if (colf) {
      const auto key = cell_text(ds.rows[r][*colf]);
      auto it = std::find(groups.begin(), groups.end(), key);
      g = static_cast<std::size_t>(it - groups.begin());
      if (it == groups.end()) groups.push_back(key);
    }
    double radius = 4;
    if (sf) {
      const double sv = cell_number(ds.rows[r][*sf]);
      if (!std::isnan(sv)) radius = 3 + 9 * std::sqrt((sv - s0) / (s1 - s0));
    }
    s += Tag("circle").a("class", "point")
             .a("cx", clamp_to(p.x + (xv - x0) / (x1 - x0) * p.w, c.plot.x, c.plot.right()))
             .a("cy", clamp_to(p.bottom() - (yv - y0) / (y1 - y0) * p.h, c.plot.y, c.plot.bottom()))
             .a("r", radius).a("fill", color(c.palette, c.color_index + g)).a("fill-opacity", 0.8).empty();
  }
  return s;
}

std::string paint_pie(const Ctx& c) {
  const auto t = tabulate(c.chart);
  const auto& values = t.series.front().values;
  double total = 0;
  for (double v : values) total += std::isnan(v) ? 0 : std::abs(v);
  const double cx = c.plot.x + c.plot.w / 2, cy = c.plot.y + c.plot.h / 2;
  const double r = std::min(c.plot.w, c.plot.h) / 2;
  std::string s;
  if (total == 0) {
    return Tag("circle").a("class", "slice").a("cx", cx).a("cy", cy).a("r", r).a("fill", c.cfg.neutral_fill).empty();
  }
  double angle = -90;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::isnan(values[i]) ? 0 : std::abs(values[i]);
    if (v == 0) continue;
    const double sweep = v / total * 360.0;
    const auto fill = color(c.palette, c.color_index + i);
    if (sweep >= 360.0 - 1e-9) {
      s += Tag("circle").a("class", "slice").a("cx", cx).a("cy", cy).a("r", r).a("fill", fill).a("data-sweep", 360).empty();
    } else {
      auto [x0, y0] = polar(cx, cy, r, angle);
      auto [x1, y1] = polar(cx, cy, r, angle + sweep);
      const std::string d = "M" + num(cx) + " " + num(cy) + "L" + num(x0) + " " + num(y0) + "A" + num(r) + " " + num(r) +
                            " 0 " + (sweep > 180 ? "1" : "0") + " 1 " + num(x1) + " " + num(y1) + "Z";
      s += Tag("path").a("class", "slice").a("d", d).a("fill", fill).a("data-sweep", sweep)
               .a("stroke", c.cfg.background).a("stroke-width", 1).empty();
    }
    if (sweep >= 25 && r >= 50) {
      auto [lx, ly] = polar(cx, cy, r * 0.62, angle + sweep / 2);
      s += text(lx, ly + 4, format_decimal(v / total * 100, 0) + "%", 11, c.cfg.text_color, "middle");
    }
    angle += sweep;
  }
  return s;
}

const json& map_regions() {
  static const json regions = resources::json("map_regions.json");
  return regions;
}

std::string paint_map(const Ctx& c) {
  const auto& m = map_regions();
  const double mw = m.at("width").get<double>(), mh = m.at("height").get<double>();
  const double scale = std::min(c.plot.w / mw, c.plot.h / mh);
  const double ox = c.plot.x + (c.plot.w - mw * scale) / 2, oy = c.plot.y + (c.plot.h - mh * scale) / 2;

  // Rows are assigned to outlines in row order.
  const auto& ds = c.chart.dataset;
  const auto cat = category_field(c.chart);
  const auto val = value_field(c.chart);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : ds.rows) {
    const double v = val ? cell_number(row[*val]) : kNaN;
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const auto fill = color(c.palette, c.color_index);
  std::string s = Tag("g").a("class", "map").a("transform", "matrix(" + num(scale) + " 0 0 " + num(scale) + " " +
                                                                 num(ox) + " " + num(oy) + ")").open();
  std::string labels;
  const auto& regions = m.at("regions");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& region = regions[i];
    Tag path("path");
    path.a("class", "region").a("d", region.at("path").get<std::string>()).a("stroke", c.cfg.background)
        .a("stroke-width", 0.6).a("data-region", region.at("id").get<std::string>());
    const double v = i < ds.rows.size() && val ? cell_number(ds.rows[i][*val]) : kNaN;
    if (std::isnan(v)) {
      path.a("fill", c.cfg.neutral_fill);
    } else {
      const double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;
      path.a("fill", fill).a("fill-opacity", 0.2 + 0.8 * t);
      if (cat && scale >= 1.2) {
        const auto& anchor = region.at("anchor");
        labels += text(ox + anchor[0].get<double>() * scale, oy + anchor[1].get<double>() * scale + 3,
                       clip_text(cell_text(ds.rows[i][*cat]), 50 * scale, 9), 9, c.cfg.text_color, "middle");
      }
    }
    s += path.empty();
  }
  return s + "</g>" + labels;
}

std::string paint_matrix(const Ctx& c) {
  const auto& ds = c.chart.dataset;
  auto xf = channel_field(c.chart, Channel::X);
  auto yf = channel_field(c.chart, Channel::Y);
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < ds.fields.size(); ++i) {
    if (!is_measure(c.chart, i)) dims.push_back(i);
  }
  if (!xf || is_measure(c.chart, *xf)) xf = dims.empty() ? std::nullopt : std::optional(dims[0]);
  if (!yf || is_measure(c.chart, *yf) || yf == xf) {
    yf.reset();
    for (auto d : dims) {
      if (d != xf) {
        yf = d;
        break;
      }
    }
  }
  const auto val = value_field(c.chart);
  std::vector<std::string> xs, ys;
  auto index_of = [](std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(s);
    return v.size() - 1;
  };
  std::vector<std::tuple<std::size_t, std::size_t, double>> cells;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t r = 0; r < ds.rows.size(); ++r) {
    const auto& row = ds.rows[r];
    const auto xi = index_of(xs, xf ? cell_text(row[*xf]) : std::to_string(r));
    const auto yi = index_of(ys, yf ? cell_text(row[*yf]) : "");
    const double v = val ? cell_number(row[*val]) : kNaN;
    cells.emplace_back(xi, yi, v);
    if (!std::isnan(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double cw = c.plot.w / static_cast<double>(std::max<std::size_t>(1, xs.size()));
  const double ch = c.plot.h / static_cast<double>(std::max<std::size_t>(1, ys.size()));
  std::string s;
  for (auto [xi, yi, v] : cells) {
    const auto fill = std::isnan(v) ? c.cfg.neutral_fill
                                    : to_hex(ramp(c.palette, c.color_index, hi > lo ? (v - lo) / (hi - lo) : 1.0));
    s += Tag("rect").a("class", "cell").a("x", c.plot.x + cw * static_cast<double>(xi))
             .a("y", c.plot.y + ch * static_cast<double>(yi)).a("width", cw).a("height", ch).a("fill", fill)
             .a("stroke", c.cfg.background).a("stroke-width", 1).empty();
  }
  return s;
}

std::string paint_table(const Ctx& c) {
  const auto& ds = c.chart.dataset;
  const double rh = c.cfg.table_row_height;
  const auto fit = static_cast<std::size_t>(std::max(0.0, std::floor(c.plot.h / rh) - 1));
  const auto rows = std::min({ds.rows.size(), c.cfg.table_max_rows, fit});
  const double cw = c.plot.w / static_cast<double>(std::max<std::size_t>(1, ds.fields.size()));
  std::string s = rect({c.plot.x, c.plot.y, c.plot.w, rh}, "header", to_hex(ramp(c.palette, c.color_index, 0.55)));
  for (std::size_t f = 0; f < ds.fields.size(); ++f) {
    s += text(c.plot.x + cw * static_cast<double>(f) + 4, c.plot.y + rh - 7, clip_text(ds.fields[f].name, cw - 8, 11),
              11, c.cfg.text_color, "start", "cell");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = c.plot.y + rh * static_cast<double>(r + 1);
    if (r % 2 == 1) s += rect({c.plot.x, y, c.plot.w, rh}, "row", c.cfg.neutral_fill);
    for (std::size_t f = 0; f < ds.fields.size(); ++f) {
      s += text(c.plot.x + cw * static_cast<double>(f) + 4, y + rh - 7, clip_text(cell_text(ds.rows[r][f]), cw - 8, 11),
                11, c.cfg.text_color, "start", "cell");
    }
  }
  return s;
}

std::string group_thousands(double v) {
  const auto whole = format_decimal(std::round(std::abs(v)), 0);
  std::string out;
  for (std::size_t i = 0; i < whole.size(); ++i) {
    if (i > 0 && (whole.size() - i) % 3 == 0) out += ',';
    out += whole[i];
  }
  return (v < 0 ? "-" : "") + out;
}

std::pair<double, std::optional<std::string>> headline(const ChartSpec& chart) {
  const auto val = value_field(chart);
  if (!val || chart.dataset.rows.empty()) return {kNaN, std::nullopt};
  return {cell_number(chart.dataset.rows.front()[*val]), chart.dataset.fields[*val].unit};
}

// Digits on flip-card tiles.
std::string paint_text(const Ctx& c) {
  const auto [v, unit] = headline(c.chart);
  const std::string digits = std::isnan(v) ? "--" : std::abs(v) >= 1000 ? group_thousands(v) : format_decimal(v, 2);
  const bool caption = c.plot.h >= 70;
  const double area_h = caption ? c.plot.h - 18 : c.plot.h;
  const double unit_w = unit ? std::min(c.plot.w * 0.25, 14.0 * static_cast<double>(unit->size())) : 0;
  const double n = static_cast<double>(digits.size());
  const double tile_w = std::min((c.plot.w - unit_w) / n, area_h * 0.62);
  const double tile_h = tile_w / 0.62;
  const double x0 = c.plot.x + (c.plot.w - unit_w - tile_w * n) / 2;
  const double y0 = c.plot.y + (area_h - tile_h) / 2;
  const auto accent = color(c.palette, c.color_index);
  std::string s;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const double x = x0 + tile_w * static_cast<double>(i);
    s += Tag("rect").a("class", "flop").a("x", x + tile_w * 0.06).a("y", y0).a("width", tile_w * 0.88).a("height", tile_h)
             .a("rx", tile_w * 0.1).a("fill", c.cfg.neutral_fill).a("stroke", accent).a("stroke-width", 1).empty();
    s += text(x + tile_w / 2, y0 + tile_h * 0.72, std::string(1, digits[i]), tile_h * 0.7, c.cfg.text_color, "middle",
              "digit");
  }
  if (unit) {
    s += text(x0 + tile_w * n + 4, y0 + tile_h * 0.72, *unit, std::max(9.0, tile_h * 0.3), accent, "start", "unit");
  }
  if (caption) {
    const auto val = value_field(c.chart);
    const auto name = val ? c.chart.dataset.fields[*val].name : std::string();
    s += text(c.plot.x + c.plot.w / 2, c.plot.bottom() - 4, clip_text(name, c.plot.w, 11), 11, c.cfg.muted_text_color,
              "middle");
  }
  return s;
}

// Gauge with a 240 degree track.
std::string paint_glyph(const Ctx& c) {
  const auto [v, unit] = headline(c.chart);
  double share = 0;
  if (!std::isnan(v)) {
    if (unit && *unit == "%") {
      share = v / 100.0;
    } else if (v != 0) {
      share = std::abs(v) / std::pow(10.0, std::ceil(std::log10(std::abs(v))));
    }
  }
  share = clamp_to(share, 0, 1);
  const double r = std::min(c.plot.w / 2, c.plot.h / 1.5) * 0.85;
  const double cx = c.plot.x + c.plot.w / 2, cy = c.plot.y + c.plot.h * 0.55;
  const double width = std::max(3.0, r * 0.18);
  std::string s = Tag("path").a("class", "gauge-track").a("d", arc_path(cx, cy, r, 150, 240)).a("fill", "none")
                      .a("stroke", c.cfg.neutral_fill).a("stroke-width", width).a("stroke-linecap", "round").empty();
  if (share > 0) {
    s += Tag("path").a("class", "gauge-value").a("d", arc_path(cx, cy, r, 150, 240 * share)).a("fill", "none")
             .a("stroke", color(c.palette, c.color_index)).a("stroke-width", width).a("stroke-linecap", "round")
             .a("data-share", share).empty();
  }
  const std::string label = std::isnan(v) ? "--" : format_decimal(v, 1) + (unit ? (*unit == "%" ? "%" : " " + *unit) : "");
  s += text(cx, cy + r * 0.15, label, std::max(10.0, r * 0.35), c.cfg.text_color, "middle", "gauge-label");
  return s;
}

// Node-link stub: categories on a zigzag, consecutive nodes linked.
std::string paint_diagram(const Ctx& c) {
  const auto t = tabulate(c.chart);
  const auto n = std::min<std::size_t>(t.categories.size(), 10);
  const auto [lo, hi] = extent(t, false);
  const Rect p = inset(c.plot, 16);
  auto pos = [&](std::size_t i) {
    const double x = n <= 1 ? p.x + p.w / 2 : p.x + p.w * static_cast<double>(i) / static_cast<double>(n - 1);
    const double y = p.y + p.h * (i % 2 == 0 ? 0.3 : 0.7);
    return std::pair{x, y};
  };
  std::string s;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto [x0, y0] = pos(i);
    auto [x1, y1] = pos(i + 1);
    s += Tag("path").a("class", "link").a("d", "M" + num(x0) + " " + num(y0) + "L" + num(x1) + " " + num(y1))
             .a("stroke", c.cfg.muted_text_color).a("stroke-width", 1.5).empty();
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto [x, y] = pos(i);
    const double v = t.series.front().values[i];
    const double r = std::isnan(v) ? 5 : 5 + 9 * (v - lo) / (hi - lo);
    s += Tag("circle").a("class", "node").a("cx", x).a("cy", y).a("r", r).a("fill", color(c.palette, c.color_index + i)).empty();
  }
  return s;
}

// Radial bars: one ring per category, sweep proportional to value.
std::string paint_circle(const Ctx& c) {
  const auto t = tabulate(c.chart);
  const auto n = std::min<std::size_t>(t.categories.size(), 12);
  const auto [lo, hi] = extent(t, true);
  const double cx = c.plot.x + c.plot.w / 2, cy = c.plot.y + c.plot.h / 2;
  const double outer = std::min(c.plot.w, c.plot.h) / 2;
  const double inner = outer * 0.25;
  const double ring = (outer - inner) / static_cast<double>(std::max<std::size_t>(1, n));
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = t.series.front().values[i];
    if (std::isnan(v) || hi <= 0) continue;
    const double sweep = clamp_to(v / hi, 0, 1) * 270.0;
    if (sweep <= 0) continue;
    const double r = inner + ring * (static_cast<double>(i) + 0.5);
    s += Tag("path").a("class", "radial").a("d", arc_path(cx, cy, r, -90, sweep)).a("fill", "none")
             .a("stroke", color(c.palette, c.color_index + i)).a("stroke-width", ring * 0.7).empty();
  }
  (void)lo;
  return s;
}

std::string paint_placeholder(const Rect& r, const std::string& label, const RenderConfig& cfg) {
  return rect(r, "placeholder", cfg.neutral_fill) +
         text(r.x + r.w / 2, r.y + r.h / 2 + 4, clip_text(label, r.w, 10), 10, cfg.muted_text_color, "middle");
}

std::string chart_group(const ChartSpec& chart, const Rect& slot, const std::string& body) {
  return Tag("g").a("class", "chart").a("data-type", std::string(enum_name(chart.chart_type)))
             .a("data-slot", num(slot.x) + " " + num(slot.y) + " " + num(slot.w) + " " + num(slot.h)).open() +
         body + "</g>";
}

const EmbellishmentSpec* find_embellishment(const StyleSpec& style, EmbellishmentKind kind) {
  for (const auto& e : style.embellishments) {
    if (e.kind == kind) return &e;
  }
  return nullptr;
}

std::string unit_transform(const Rect& r) {
  return "matrix(" + num(r.w) + " 0 0 " + num(r.h) + " " + num(r.x) + " " + num(r.y) + ")";
}

}  // namespace

const RenderConfig& RenderConfig::shipped() {
  static const RenderConfig cfg = [] {
    const auto j = resources::json("renderer.json");
    RenderConfig c;
    c.banner_height = j.at("banner_height").get<int>();
    c.background = j.at("background").get<std::string>();
    c.banner_fill = j.at("banner_fill").get<std::string>();
    c.panel_fill = j.at("panel_fill").get<std::string>();
    c.text_color = j.at("text_color").get<std::string>();
    c.muted_text_color = j.at("muted_text_color").get<std::string>();
    c.neutral_fill = j.at("neutral_fill").get<std::string>();
    c.view_padding = j.at("view_padding").get<double>();
    c.view_title_height = j.at("view_title_height").get<double>();
    c.chart_gap = j.at("chart_gap").get<double>();
    c.chart_margin = j.at("chart_margin").get<double>();
    c.table_max_rows = j.at("table_max_rows").get<std::size_t>();
    c.table_row_height = j.at("table_row_height").get<double>();
    for (const auto& [name, wh] : j.at("min_slot").items()) {
      const auto type = enum_from<ChartType>(name);
      if (!type) throw ConfigError("renderer.json: unknown chart type '" + name + "'");
      c.min_slot[*type] = {wh.at(0).get<double>(), wh.at(1).get<double>()};
    }
    for (auto t : enum_values<ChartType>()) {
      if (!c.min_slot.count(t)) throw ConfigError("renderer.json: no minimum slot for " + std::string(enum_name(t)));
    }
    return c;
  }();
  return cfg;
}

std::string RenderedPrototype::hash_hex() const { return hex_digest(content_hash); }

std::uint64_t content_hash(const std::string& document) { return fnv1a64(document); }

std::string render_chart(const ChartSpec& chart, const Rect& slot, const Palette& palette, std::size_t color_index) {
  const auto& cfg = RenderConfig::shipped();
  const auto [min_w, min_h] = cfg.min_slot.at(chart.chart_type);
  if (!(slot.w >= min_w && slot.h >= min_h)) {
    throw SlotTooSmall(std::string(enum_name(chart.chart_type)) + " needs at least " + num(min_w) + "x" + num(min_h) +
                       " px, slot is " + num(slot.w) + "x" + num(slot.h));
  }
  const Ctx c{chart, inset(slot, cfg.chart_margin), palette, color_index, cfg};
  std::string body;
  switch (chart.chart_type) {
    case ChartType::Bar: body = paint_bar(c); break;
    case ChartType::Line: body = paint_line_area(c, false); break;
    case ChartType::Area: body = paint_line_area(c, true); break;
    case ChartType::Point: body = paint_point(c); break;
    case ChartType::Pie: body = paint_pie(c); break;
    case ChartType::Map: body = paint_map(c); break;
    case ChartType::Matrix: body = paint_matrix(c); break;
    case ChartType::Table: body = paint_table(c); break;
    case ChartType::Text: body = paint_text(c); break;
    case ChartType::Glyph: body = paint_glyph(c); break;
    case ChartType::Diagram: body = paint_diagram(c); break;
    case ChartType::Circle: body = paint_circle(c); break;
    case ChartType::SciVis: body = paint_placeholder(c.plot, "SciVis", cfg); break;
  }
  return canonicalize_attributes(chart_group(chart, slot, body));
}

Rect content_region(const ScreenSize& screen) {
  const double banner = RenderConfig::shipped().banner_height;
  return {0, banner, static_cast<double>(screen.width), static_cast<double>(screen.height) - banner};
}

std::vector<assembly::PlacedView> view_rects(const DashboardSpec& spec) {
  return assembly::realize_snapped(spec.layout, content_region(spec.layout.screen));
}

std::vector<Rect> chart_slots(const ViewSpec& view, const Rect& view_rect) {
  const auto& cfg = RenderConfig::shipped();
  const double pad = cfg.view_padding;
  const Rect inner{view_rect.x + pad, view_rect.y + pad + cfg.view_title_height, std::max(0.0, view_rect.w - 2 * pad),
                   std::max(0.0, view_rect.h - 2 * pad - cfg.view_title_height)};
  if (view.charts.size() <= 1) return std::vector<Rect>(view.charts.size(), inner);

  const double aspect = inner.h > 0 ? inner.w / inner.h : 1.0;
  std::vector<Rect> units(view.charts.size());
  try {
    for (const auto& slot : assembly::compose_small_multiple(view, aspect).slots) units[slot.chart_index] = slot.rect;
  } catch (const RuleViolation&) {
    // Charts that break the small-multiple rules still get an equal split.
    const auto n = static_cast<double>(view.charts.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
      const double k = static_cast<double>(i);
      units[i] = aspect >= 1 ? Rect{k / n, 0, 1 / n, 1} : Rect{0, k / n, 1, 1 / n};
    }
  }
  std::vector<Rect> out;
  const double half_gap = cfg.chart_gap / 2;
  for (const auto& u : units) {
    const Rect px{inner.x + u.x * inner.w, inner.y + u.y * inner.h, u.w * inner.w, u.h * inner.h};
    out.push_back(inset(px, half_gap));
  }
  return out;
}

RenderedPrototype render_dashboard(const DashboardSpec& spec) {
  const auto verdict = evaluator::evaluate(spec);
  if (!verdict.passed) {
    std::string rules;
    for (const auto& v : verdict.violations) rules += (rules.empty() ? "" : ", ") + v.rule;
    throw EvaluationRequired("spec fails evaluation (" + rules + ")");
  }
  const auto& cfg = RenderConfig::shipped();
  const int W = spec.layout.screen.width, H = spec.layout.screen.height;
  const double banner = cfg.banner_height;
  const auto theme = to_hex(spec.style.theme_color);

  std::string doc = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  doc += Tag("svg").a("xmlns", "http://www.w3.org/2000/svg").a("version", "1.1").a("width", W).a("height", H)
             .a("viewBox", "0 0 " + std::to_string(W) + " " + std::to_string(H))
             .a("font-family", "Helvetica, Arial, sans-serif").open();
  doc += "\n" + rect({0, 0, double(W), double(H)}, "background", cfg.background) + "\n";

  // Banner: icon, title, divider.
  doc += Tag("g").a("class", "banner").open() + rect({0, 0, double(W), banner}, "banner-fill", cfg.banner_fill);
  double title_x = double(W) / 2;
  if (const auto* icon = find_embellishment(spec.style, EmbellishmentKind::Icon)) {
    const double s = (banner - 24) / 24;
    doc += Tag("g").a("class", "banner-icon").a("transform", unit_transform({20, 12, s, s})).open() +
           stylization::render_embellishment(*icon) + "</g>";
  }
  doc += text(title_x, banner / 2 + 10, spec.title, 28, cfg.text_color, "middle", "title");
  if (const auto* divider = find_embellishment(spec.style, EmbellishmentKind::Divider)) {
    doc += Tag("g").a("class", "banner-divider").a("transform", unit_transform({20, banner - 8, double(W) - 40, 8})).open() +
           stylization::render_embellishment(*divider) + "</g>";
  } else {
    doc += Tag("path").a("class", "banner-rule").a("d", "M0 " + num(banner - 1) + "H" + std::to_string(W))
               .a("stroke", theme).a("stroke-width", 2).empty();
  }
  doc += "</g>\n";

  const auto* border = find_embellishment(spec.style, EmbellishmentKind::Border);
  const std::string border_svg = border ? stylization::render_embellishment(*border) : std::string();
  for (const auto& placed : view_rects(spec)) {
    const auto* view = spec.find_view(placed.view_id);
    const auto& r = placed.rect;
    doc += Tag("g").a("class", "view").a("data-view", placed.view_id).open();
    doc += Tag("rect").a("class", "view-frame").a("x", r.x).a("y", r.y).a("width", r.w).a("height", r.h)
               .a("fill", cfg.panel_fill).empty();
    if (border) {
      doc += Tag("g").a("class", "view-border").a("transform", unit_transform(r)).open() + border_svg + "</g>";
    } else {
      doc += Tag("rect").a("class", "view-border").a("x", r.x + 0.5).a("y", r.y + 0.5).a("width", r.w - 1)
                 .a("height", r.h - 1).a("fill", "none").a("stroke", theme).a("stroke-width", 1).empty();
    }
    doc += text(r.x + cfg.view_padding, r.y + cfg.view_padding + 16, clip_text(view->title, r.w - 2 * cfg.view_padding, 16),
                16, cfg.text_color, "start", "view-title");
    const auto slots = chart_slots(*view, r);
    std::vector<std::size_t> colors(view->charts.size(), 0);
    if (view->charts.size() > 1) {
      try {
        for (const auto& s : assembly::compose_small_multiple(*view).slots) colors[s.chart_index] = s.color_index;
      } catch (const RuleViolation&) {
      }
    }
    for (std::size_t i = 0; i < view->charts.size(); ++i) {
      try {
        doc += render_chart(view->charts[i], slots[i], spec.style.palette, colors[i]);
      } catch (const SlotTooSmall&) {
        doc += chart_group(view->charts[i], slots[i],
                           paint_placeholder(slots[i], std::string(enum_name(view->charts[i].chart_type)), cfg));
      }
    }
    doc += "</g>\n";
  }
  doc += "</svg>\n";

  RenderedPrototype out;
  out.width = W;
  out.height = H;
  out.document = canonicalize_attributes(doc);
  out.content_hash = content_hash(out.document);
  return out;
}

Thumbnail render_thumbnail(const RenderedPrototype& prototype, double max_edge) {
  if (!(max_edge > 0)) throw InvariantViolation("thumbnail edge must be positive");
  if (prototype.width <= 0 || prototype.height <= 0) throw InvariantViolation("prototype has no size");
  const auto open = prototype.document.find("<svg");
  const auto body_start = open == std::string::npos ? open : prototype.document.find('>', open);
  const auto body_end = prototype.document.rfind("</svg>");
  if (body_start == std::string::npos || body_end == std::string::npos || body_end < body_start) {
    throw InvariantViolation("prototype document has no svg root");
  }
  const double scale = max_edge / std::max(prototype.width, prototype.height);
  Thumbnail t;
  t.width = prototype.width * scale;
  t.height = prototype.height * scale;
  t.svg = Tag("svg").a("xmlns", "http://www.w3.org/2000/svg").a("version", "1.1").a("width", t.width).a("height", t.height)
              .a("viewBox", "0 0 " + std::to_string(prototype.width) + " " + std::to_string(prototype.height))
              .a("class", "thumbnail").open() +
          prototype.document.substr(body_start + 1, body_end - body_start - 1) + "</svg>";
  t.svg = canonicalize_attributes(t.svg);
  return t;
}

std::string canonicalize_attributes(std::string_view svg) {
  std::string out;
  out.reserve(svg.size());
  std::size_t i = 0;
  while (i < svg.size()) {
    const char ch = svg[i];
    const bool start_tag = ch == '<' && i + 1 < svg.size() && std::isalpha(static_cast<unsigned char>(svg[i + 1]));
    if (!start_tag) {
      out += ch;
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < svg.size() && !std::isspace(static_cast<unsigned char>(svg[j])) && svg[j] != '>' && svg[j] != '/') ++j;
    const auto name = svg.substr(i + 1, j - i - 1);
    std::vector<std::pair<std::string_view, std::string_view>> attrs;
    bool self_closing = false;
    while (j < svg.size()) {
      while (j < svg.size() && std::isspace(static_cast<unsigned char>(svg[j]))) ++j;
      if (j >= svg.size()) break;
      if (svg[j] == '>') {
        ++j;
        break;
      }
      if (svg[j] == '/') {
        self_closing = true;
        j += 2;
        break;
      }
      const auto eq = svg.find('=', j);
      if (eq == std::string_view::npos || eq + 1 >= svg.size()) throw InvariantViolation("malformed attribute in svg");
      const char quote = svg[eq + 1];
      const auto close = svg.find(quote, eq + 2);
      if (close == std::string_view::npos) throw InvariantViolation("unterminated attribute in svg");
      attrs.emplace_back(svg.substr(j, eq - j), svg.substr(eq + 2, close - eq - 2));
      j = close + 1;
    }
    std::stable_sort(attrs.begin(), attrs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out += '<';
    out += name;
    for (const auto& [k, v] : attrs) {
      out += ' ';
      out += k;
      out += "=\"";
      out += v;
      out += '"';
    }
    out += self_closing ? "/>" : ">";
    i = j;
  }
  return out;
}

}  // namespace dashgen::renderer
