#include "dashgen/stylization/stylization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"

namespace dashgen::stylization {

using nlohmann::json;

namespace {

// D65 white from its chromaticity (0.3127, 0.3290); the matrices follow from the sRGB primaries.
constexpr double kWhiteX = 0.9504559271, kWhiteY = 1.0, kWhiteZ = 1.0890577508;
constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;

double to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }
double to_gamma(double c) { return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055; }
double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }
double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

std::uint8_t quantize(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

const json& style_config() {
  static const json cfg = resources::json("stylization.json");
  return cfg;
}

const json& preset_table() {
  static const json cfg = resources::json("palettes.json").at("presets");
  return cfg;
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Lab srgb_to_lab(Rgb c) {
  const double r = to_linear(c.r / 255.0), g = to_linear(c.g / 255.0), b = to_linear(c.b / 255.0);
  const double x = 0.4123907993 * r + 0.3575843394 * g + 0.1804807884 * b;
  const double y = 0.2126390059 * r + 0.7151686788 * g + 0.0721923154 * b;
  const double z = 0.0193308187 * r + 0.1191947798 * g + 0.9505321522 * b;
  const double fx = lab_f(x / kWhiteX), fy = lab_f(y / kWhiteY), fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb lab_to_srgb(const Lab& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double x = kWhiteX * lab_f_inv(fx), y = kWhiteY * lab_f_inv(fy), z = kWhiteZ * lab_f_inv(fz);
  const double r = 3.2409699419 * x - 1.5373831776 * y - 0.4986107603 * z;
  const double g = -0.9692436363 * x + 1.8759675015 * y + 0.0415550574 * z;
  const double b = 0.0556300797 * x - 0.2039769589 * y + 1.0569715142 * z;
  return {quantize(to_gamma(std::max(0.0, r))), quantize(to_gamma(std::max(0.0, g))),
          quantize(to_gamma(std::max(0.0, b)))};
}

double ciede2000(const Lab& x, const Lab& y) {
  const double c1 = std::hypot(x.a, x.b), c2 = std::hypot(y.a, y.b);
  const double c_bar7 = std::pow((c1 + c2) / 2.0, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + std::pow(25.0, 7.0))));
  const double a1 = (1.0 + g) * x.a, a2 = (1.0 + g) * y.a;
  const double cp1 = std::hypot(a1, x.b), cp2 = std::hypot(a2, y.b);
  auto hue = [](double b, double a) {
    if (a == 0 && b == 0) return 0.0;
    double h = deg(std::atan2(b, a));
    return h < 0 ? h + 360.0 : h;
  };
  const double h1 = hue(x.b, a1), h2 = hue(y.b, a2);

  const double dL = y.L - x.L;
  const double dC = cp2 - cp1;
  double dh = 0;
  if (cp1 * cp2 != 0) {
    dh = h2 - h1;
    if (dh > 180) dh -= 360;
    else if (dh < -180) dh += 360;
  }
  const double dH = 2.0 * std::sqrt(cp1 * cp2) * std::sin(rad(dh / 2.0));

  const double L_bar = (x.L + y.L) / 2.0;
  const double C_bar = (cp1 + cp2) / 2.0;
  double h_bar = h1 + h2;
  if (cp1 * cp2 != 0) {
    if (std::abs(h1 - h2) <= 180) h_bar = (h1 + h2) / 2.0;
    else if (h1 + h2 < 360) h_bar = (h1 + h2 + 360) / 2.0;
    else h_bar = (h1 + h2 - 360) / 2.0;
  }
  const double t = 1.0 - 0.17 * std::cos(rad(h_bar - 30)) + 0.24 * std::cos(rad(2 * h_bar)) +
                   0.32 * std::cos(rad(3 * h_bar + 6)) - 0.20 * std::cos(rad(4 * h_bar - 63));
  const double d_theta = 30.0 * std::exp(-std::pow((h_bar - 275.0) / 25.0, 2.0));
  const double C_bar7 = std::pow(C_bar, 7.0);
  const double r_c = 2.0 * std::sqrt(C_bar7 / (C_bar7 + std::pow(25.0, 7.0)));
  const double s_l = 1.0 + 0.015 * std::pow(L_bar - 50.0, 2.0) / std::sqrt(20.0 + std::pow(L_bar - 50.0, 2.0));
  const double s_c = 1.0 + 0.045 * C_bar;
  const double s_h = 1.0 + 0.015 * C_bar * t;
  const double r_t = -std::sin(rad(2.0 * d_theta)) * r_c;
  const double tl = dL / s_l, tc = dC / s_c, th = dH / s_h;
  return std::sqrt(tl * tl + tc * tc + th * th + r_t * tc * th);
}

double delta_e(Rgb x, Rgb y) { return ciede2000(srgb_to_lab(x), srgb_to_lab(y)); }

Rgb parse_hex(std::string_view hex) {
  if (!hex.empty() && hex.front() == '#') hex.remove_prefix(1);
  if (hex.size() != 6 || !std::all_of(hex.begin(), hex.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
    throw InvariantViolation("not a #rrggbb color: '" + std::string(hex) + "'");
  }
  auto byte = [&](std::size_t i) { return static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)); };
  return {byte(0), byte(2), byte(4)};
}

std::string color_name(Rgb c) {
  static const auto table = [] {
    std::vector<std::pair<std::string, Lab>> out;
    for (const auto& [name, hex] : style_config().at("named_colors").items()) {
      out.emplace_back(name, srgb_to_lab(parse_hex(hex.get<std::string>())));
    }
    return out;
  }();
  const auto lab = srgb_to_lab(c);
  const std::string* best = &table.front().first;
  double best_d = 1e300;
  for (const auto& [name, ref] : table) {
    const double d = ciede2000(lab, ref);
    if (d < best_d) {
      best_d = d;
      best = &name;
    }
  }
  return *best;
}

// --- palettes ---------------------------------------------------------------------

const PaletteRules& PaletteRules::shipped() {
  static const PaletteRules rules = [] {
    const auto& c = style_config();
    PaletteRules r;
    r.categorical_min_delta_e = c.at("categorical_min_delta_e").get<double>();
    r.categorical_min = c.at("categorical_size").at(0).get<std::size_t>();
    r.categorical_max = c.at("categorical_size").at(1).get<std::size_t>();
    r.sequential_min = c.at("sequential_size").at(0).get<std::size_t>();
    r.sequential_max = c.at("sequential_size").at(1).get<std::size_t>();
    r.repair_lightness_step = c.at("repair_lightness_step").get<double>();
    r.repair_max_rounds = c.at("repair_max_rounds").get<int>();
    r.fallback_palette = c.at("fallback_palette").get<std::string>();
    return r;
  }();
  return rules;
}

namespace {

struct Pair {
  std::size_t i, j;
  double d;
};

std::optional<Pair> closest_failing_pair(const std::vector<Rgb>& colors, double min_delta) {
  std::optional<Pair> worst;
  for (std::size_t i = 0; i < colors.size(); ++i) {
    for (std::size_t j = i + 1; j < colors.size(); ++j) {
      const double d = delta_e(colors[i], colors[j]);
      if (d < min_delta && (!worst || d < worst->d)) worst = Pair{i, j, d};
    }
  }
  return worst;
}

/// +1 when lightness rises from the first to the last stop.
int lightness_direction(const std::vector<Rgb>& colors) {
  return srgb_to_lab(colors.back()).L >= srgb_to_lab(colors.front()).L ? 1 : -1;
}

std::optional<std::size_t> first_non_monotone(const std::vector<Rgb>& colors) {
  const int dir = lightness_direction(colors);
  for (std::size_t i = 1; i < colors.size(); ++i) {
    const double step = srgb_to_lab(colors[i]).L - srgb_to_lab(colors[i - 1]).L;
    if (!(dir * step > 0)) return i;
  }
  return std::nullopt;
}

std::vector<Rgb> resample(const std::vector<Rgb>& stops, std::size_t n) {
  std::vector<Lab> labs;
  for (auto c : stops) labs.push_back(srgb_to_lab(c));
  std::vector<Rgb> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (labs.size() == 1) {
      // Spread a single stop into a ramp around its lightness.
      Lab l = labs[0];
      l.L = 15.0 + 70.0 * static_cast<double>(k) / static_cast<double>(n - 1);
      out.push_back(lab_to_srgb(l));
      continue;
    }
    const double pos = static_cast<double>(k) * static_cast<double>(labs.size() - 1) / static_cast<double>(n - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), labs.size() - 2);
    const double t = pos - static_cast<double>(lo);
    const auto& a = labs[lo];
    const auto& b = labs[lo + 1];
    out.push_back(lab_to_srgb({a.L + (b.L - a.L) * t, a.a + (b.a - a.a) * t, a.b + (b.b - a.b) * t}));
  }
  return out;
}

/// Moves a color's lightness by `delta`; when clipping leaves the color
/// unchanged, tries the opposite direction.
Rgb shift_lightness(Rgb c, double delta) {
  Lab lab = srgb_to_lab(c);
  Lab moved = lab;
  moved.L = std::clamp(lab.L + delta, 0.0, 100.0);
  Rgb out = lab_to_srgb(moved);
  if (out == c) {
    moved.L = std::clamp(lab.L - delta, 0.0, 100.0);
    out = lab_to_srgb(moved);
  }
  return out;
}

}  // namespace

std::vector<std::string> palette_problems(const Palette& p, const PaletteRules& rules) {
  std::vector<std::string> out;
  const bool categorical = p.kind == PaletteKind::Categorical;
  const auto lo = categorical ? rules.categorical_min : rules.sequential_min;
  const auto hi = categorical ? rules.categorical_max : rules.sequential_max;
  if (p.colors.size() < lo || p.colors.size() > hi) {
    out.push_back(std::string(enum_name(p.kind)) + " palette needs " + std::to_string(lo) + "-" + std::to_string(hi) +
                  " colors, has " + std::to_string(p.colors.size()));
  }
  if (p.colors.empty()) return out;
  if (categorical) {
    for (std::size_t i = 0; i < p.colors.size(); ++i) {
      for (std::size_t j = i + 1; j < p.colors.size(); ++j) {
        const double d = delta_e(p.colors[i], p.colors[j]);
        if (d < rules.categorical_min_delta_e) {
          out.push_back("colors " + to_hex(p.colors[i]) + " and " + to_hex(p.colors[j]) + " are only " +
                        format_decimal(d, 2) + " apart");
        }
      }
    }
  } else if (auto i = first_non_monotone(p.colors)) {
    out.push_back("lightness is not strictly monotone at stop " + std::to_string(*i));
  }
  return out;
}

RepairResult repair_palette(Palette palette, const PaletteRules& rules) {
  RepairResult res;
  auto& colors = palette.colors;
  const auto original = palette;

  auto fallback = [&](const std::string& why) {
    res.diagnostics.push_back("palette '" + original.name + "' " + why + "; using preset '" + rules.fallback_palette + "'");
    res.palette = preset_palette(rules.fallback_palette, original.kind);
    return res;
  };

  if (palette.kind == PaletteKind::Categorical) {
    if (colors.size() > rules.categorical_max) {
      res.diagnostics.push_back("kept the first " + std::to_string(rules.categorical_max) + " of " +
                                std::to_string(colors.size()) + " colors");
      colors.resize(rules.categorical_max);
    }
    if (colors.size() < rules.categorical_min) {
      const auto before = colors.size();
      for (const auto& name : preset_names()) {
        for (const auto& hex : preset_table().at(name).at("categorical")) {
          if (colors.size() >= rules.categorical_min) break;
          const auto c = parse_hex(hex.get<std::string>());
          const bool distinct = std::all_of(colors.begin(), colors.end(), [&](Rgb x) {
            return delta_e(x, c) >= rules.categorical_min_delta_e;
          });
          if (distinct) colors.push_back(c);
        }
      }
      res.diagnostics.push_back("padded " + std::to_string(before) + " colors to " + std::to_string(colors.size()));
    }
    int rounds = 0;
    while (auto pair = closest_failing_pair(colors, rules.categorical_min_delta_e)) {
      if (++rounds > rules.repair_max_rounds) return fallback("could not be separated");
      const double li = srgb_to_lab(colors[pair->i]).L, lj = srgb_to_lab(colors[pair->j]).L;
      const double delta = lj >= li ? rules.repair_lightness_step : -rules.repair_lightness_step;
      colors[pair->j] = shift_lightness(colors[pair->j], delta);
    }
    if (rounds > 0) res.diagnostics.push_back("nudged lightness over " + std::to_string(rounds) + " rounds to separate colors");
  } else {
    if (colors.empty()) return fallback("has no stops");
    if (colors.size() < rules.sequential_min || colors.size() > rules.sequential_max) {
      const auto n = std::clamp(colors.size(), rules.sequential_min, rules.sequential_max);
      res.diagnostics.push_back("resampled " + std::to_string(colors.size()) + " stops to " + std::to_string(n));
      colors = resample(colors, n);
    }
    int rounds = 0;
    while (auto i = first_non_monotone(colors)) {
      if (++rounds > rules.repair_max_rounds) return fallback("has no monotone lightness");
      const int dir = lightness_direction(colors);
      Lab lab = srgb_to_lab(colors[*i]);
      const double prev = srgb_to_lab(colors[*i - 1]).L;
      lab.L = std::clamp(prev + dir * rules.repair_lightness_step, 0.0, 100.0);
      const auto moved = lab_to_srgb(lab);
      if (moved == colors[*i]) return fallback("has no monotone lightness");
      colors[*i] = moved;
    }
    if (rounds > 0) res.diagnostics.push_back("nudged lightness over " + std::to_string(rounds) + " rounds to order stops");
  }
  if (!palette_problems(palette, rules).empty()) return fallback("still breaks the palette rules");
  res.palette = std::move(palette);
  return res;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : preset_table().items()) out.push_back(name);
  return out;
}

Palette preset_palette(const std::string& name, PaletteKind kind) {
  if (!preset_table().contains(name)) throw UnknownTemplate("unknown palette preset '" + name + "'");
  Palette p;
  p.kind = kind;
  p.name = name;
  const auto key = kind == PaletteKind::Categorical ? "categorical" : "sequential";
  for (const auto& hex : preset_table().at(name).at(key)) p.colors.push_back(parse_hex(hex.get<std::string>()));
  return p;
}

std::string match_preset(const std::string& domain, const std::string& theme_hint) {
  auto tokens = tokenize(domain + " " + theme_hint);
  std::string best = PaletteRules::shipped().fallback_palette;
  int best_score = 0;
  for (const auto& name : preset_names()) {
    const auto& entry = preset_table().at(name);
    int score = 0;
    for (const auto& t : tokens) {
      for (const auto& k : entry.at("keywords")) score += k.get<std::string>() == t ? 2 : 0;
      for (const auto& part : tokenize(name)) score += part == t ? 1 : 0;
    }
    if (score > best_score) {
      best_score = score;
      best = name;
    }
  }
  return best;
}

PaletteKind required_palette_kind(const std::vector<ViewSpec>& views) {
  for (const auto& v : views) {
    for (const auto& c : v.charts) {
      auto it = c.encoding.find(Channel::Color);
      if (it == c.encoding.end()) continue;
      const auto* f = c.dataset.field(it->second);
      if (f && f->kind != FieldKind::Measure) return PaletteKind::Categorical;
    }
  }
  return PaletteKind::Sequential;
}

namespace {

constexpr const char* kPaletteInstructions =
    "You pick the global color palette of an industrial dashboard. Answer with JSON only: either "
    "{\"preset\": <name>} naming one of the listed presets, or {\"name\": text, \"colors\": [\"#rrggbb\", ...]}. "
    "Categorical palettes need 6-10 clearly distinct colors; sequential palettes need 5-9 stops with steadily "
    "changing lightness.";

std::optional<Palette> palette_from_answer(const std::string& answer, PaletteKind kind, std::string& problem) {
  const auto text = strip_code_fence(answer);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    auto word = to_lower(text);
    word.erase(0, word.find_first_not_of(" \t\r\n\""));
    word.erase(word.find_last_not_of(" \t\r\n\".") + 1);
    if (preset_table().contains(word)) return preset_palette(word, kind);
    problem = "answer is neither JSON nor a preset name";
    return std::nullopt;
  }
  if (j.is_string()) j = json{{"preset", j}};
  if (!j.is_object()) {
    problem = "answer is not a JSON object";
    return std::nullopt;
  }
  if (j.contains("preset") && j["preset"].is_string()) {
    const auto name = j["preset"].get<std::string>();
    if (preset_table().contains(name)) return preset_palette(name, kind);
    problem = "unknown preset '" + name + "'";
    return std::nullopt;
  }
  if (j.contains("colors") && j["colors"].is_array() && !j["colors"].empty()) {
    Palette p;
    p.kind = kind;
    p.name = j.value("name", std::string("custom"));
    try {
      for (const auto& c : j["colors"]) p.colors.push_back(parse_hex(c.get<std::string>()));
    } catch (const std::exception& e) {
      problem = e.what();
      return std::nullopt;
    }
    return p;
  }
  problem = "answer names neither a preset nor colors";
  return std::nullopt;
}

}  // namespace

RepairResult recommend_palette(const std::string& domain, const std::string& theme_hint, PaletteKind kind,
                               const provider::Provider& provider, const std::vector<std::string>& knowledge) {
  provider::Prompt prompt;
  prompt.stage = "palette";
  std::string presets;
  for (const auto& name : preset_names()) {
    presets += "\n- " + name + ": " + preset_table().at(name).value("description", std::string());
  }
  prompt.system = std::string(kPaletteInstructions) + "\nPresets:" + presets;
  prompt.user = json{{"domain", domain}, {"theme_hint", theme_hint}, {"kind", enum_name(kind)}}.dump();
  prompt.context_docs = knowledge;

  std::string problem;
  auto chosen = palette_from_answer(provider.complete(prompt), kind, problem);
  std::vector<std::string> diagnostics;
  if (!chosen) {
    const auto name = match_preset(domain, theme_hint);
    diagnostics.push_back("palette answer unusable (" + problem + "); matched preset '" + name + "'");
    chosen = preset_palette(name, kind);
  }
  auto res = repair_palette(std::move(*chosen));
  res.diagnostics.insert(res.diagnostics.begin(), diagnostics.begin(), diagnostics.end());
  return res;
}

Rgb extract_theme_color(const Palette& palette) {
  if (palette.colors.empty()) throw InvariantViolation("palette has no colors");
  if (palette.kind == PaletteKind::Categorical) return palette.colors.front();
  return palette.colors[(palette.colors.size() - 1) / 2];
}

Rgb series_color(const Palette& palette, std::size_t index) {
  if (palette.colors.empty()) throw InvariantViolation("palette has no colors");
  return palette.colors[index % palette.colors.size()];
}

// --- embellishments ---------------------------------------------------------------

const std::vector<Glyph>& glyphs() {
  static const std::vector<Glyph> table = [] {
    std::vector<Glyph> out;
    for (const auto& g : resources::json("glyphs/manifest.json").at("glyphs")) {
      Glyph glyph;
      glyph.id = g.at("id").get<std::string>();
      glyph.keywords = g.at("keywords").get<std::vector<std::string>>();
      glyph.svg = resources::text("glyphs/" + g.at("file").get<std::string>());
      while (!glyph.svg.empty() && std::isspace(static_cast<unsigned char>(glyph.svg.back()))) glyph.svg.pop_back();
      out.push_back(std::move(glyph));
    }
    return out;
  }();
  return table;
}

const Glyph* find_glyph(std::string_view id) {
  for (const auto& g : glyphs()) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

std::string glyph_for_domain(const std::string& domain) {
  const auto tokens = tokenize(domain);
  for (const auto& g : glyphs()) {
    for (const auto& t : tokens) {
      if (std::find(g.keywords.begin(), g.keywords.end(), t) != g.keywords.end()) return g.id;
    }
  }
  return "gauge";
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string expand(std::string text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

/// Mix toward white by `t` in [0,1].
Rgb tint(Rgb c, double t) {
  auto mix = [t](std::uint8_t v) { return static_cast<std::uint8_t>(std::lround(v + (255.0 - v) * t)); };
  return {mix(c.r), mix(c.g), mix(c.b)};
}

std::string num(double v) { return format_decimal(v, 3); }

}  // namespace

Embellishment generate_embellishment(EmbellishmentKind kind, Rgb theme_color, std::uint64_t seed,
                                     std::optional<std::string> glyph_id) {
  const auto& cfg = style_config();
  Rng rng(mix_seed(seed, std::string(enum_name(kind)) + to_hex(theme_color)));
  EmbellishmentSpec spec;
  spec.kind = kind;
  spec.theme_color = theme_color;

  const auto corners = cfg.at("corner_styles").get<std::vector<std::string>>();
  switch (kind) {
    case EmbellishmentKind::Border: {
      spec.corner_style = corners[rng.below(corners.size())];
      const auto range = cfg.at("border_stroke_range");
      const double outer = round2(rng.uniform(range.at(0).get<double>(), range.at(1).get<double>()));
      spec.stroke_widths = {outer, round2(std::max(0.5, outer * 0.5))};
      break;
    }
    case EmbellishmentKind::Divider: {
      const auto range = cfg.at("divider_stroke_range");
      spec.stroke_widths = {round2(rng.uniform(range.at(0).get<double>(), range.at(1).get<double>()))};
      break;
    }
    case EmbellishmentKind::Icon: {
      if (glyph_id) {
        if (!find_glyph(*glyph_id)) throw InvariantViolation("unknown glyph '" + *glyph_id + "'");
        spec.glyph_id = *glyph_id;
      } else {
        spec.glyph_id = glyphs()[rng.below(glyphs().size())].id;
      }
      spec.stroke_widths = {1.0};
      break;
    }
  }

  auto prompt = cfg.at("prompt_templates").at(std::string(enum_name(kind))).get<std::string>();
  prompt = expand(prompt, "{color}", color_name(theme_color));
  prompt = expand(prompt, "{corner}", spec.corner_style);
  prompt = expand(prompt, "{glyph}", spec.glyph_id.value_or(""));
  spec.prompt_text = prompt;

  Embellishment out{spec, render_embellishment(spec)};
  return out;
}

std::string render_embellishment(const EmbellishmentSpec& spec) {
  if (spec.stroke_widths.empty() ||
      std::any_of(spec.stroke_widths.begin(), spec.stroke_widths.end(), [](double w) { return !(w > 0); })) {
    throw InvariantViolation("embellishment strokes must be positive");
  }
  const auto main = to_hex(spec.theme_color);
  const auto light = to_hex(tint(spec.theme_color, 0.45));
  const double w0 = spec.stroke_widths[0];
  const double w1 = spec.stroke_widths.size() > 1 ? spec.stroke_widths[1] : w0;
  const std::string ns = "vector-effect=\"non-scaling-stroke\"";
  std::string s;

  switch (spec.kind) {
    case EmbellishmentKind::Border: {
      s = "<g class=\"emb-border\" data-corner=\"" + xml_escape(spec.corner_style) + "\" fill=\"none\">";
      const double c = 0.04;  // corner accent length in unit box
      if (spec.corner_style == "chamfer") {
        s += "<path d=\"M" + num(c) + " 0H" + num(1 - c) + "L1 " + num(c) + "V" + num(1 - c) + "L" + num(1 - c) +
             " 1H" + num(c) + "L0 " + num(1 - c) + "V" + num(c) + "Z\" stroke=\"" + main + "\" stroke-width=\"" +
             num(w0) + "\" " + ns + "/>";
      } else if (spec.corner_style == "round") {
        s += "<rect x=\"0\" y=\"0\" width=\"1\" height=\"1\" rx=\"0.02\" ry=\"0.02\" stroke=\"" + main +
             "\" stroke-width=\"" + num(w0) + "\" " + ns + "/>";
      } else {
        const double opacity = spec.corner_style == "bracket" ? 0.35 : 1.0;
        s += "<rect x=\"0\" y=\"0\" width=\"1\" height=\"1\" stroke=\"" + main + "\" stroke-opacity=\"" +
             num(opacity) + "\" stroke-width=\"" + num(w0) + "\" " + ns + "/>";
      }
      const double k = 2 * c;
      s += "<path d=\"M0 " + num(k) + "V0H" + num(k) + "M" + num(1 - k) + " 0H1V" + num(k) + "M1 " + num(1 - k) +
           "V1H" + num(1 - k) + "M" + num(k) + " 1H0V" + num(1 - k) + "\" stroke=\"" + light + "\" stroke-width=\"" +
           num(w0 + w1) + "\" " + ns + "/>";
      s += "</g>";
      break;
    }
    case EmbellishmentKind::Divider:
      s = "<g class=\"emb-divider\" fill=\"none\"><path d=\"M0 0.5H1\" stroke=\"" + main + "\" stroke-width=\"" +
          num(w0) + "\" " + ns + "/><path d=\"M0.25 0.3V0.7M0.5 0.2V0.8M0.75 0.3V0.7\" stroke=\"" + light +
          "\" stroke-width=\"" + num(w0) + "\" " + ns + "/></g>";
      break;
    case EmbellishmentKind::Icon: {
      const auto* g = spec.glyph_id ? find_glyph(*spec.glyph_id) : nullptr;
      if (!g) throw InvariantViolation("unknown glyph '" + spec.glyph_id.value_or("") + "'");
      s = "<g class=\"emb-icon\" data-glyph=\"" + g->id + "\" fill=\"" + main + "\" color=\"" + main + "\">" +
          expand(g->svg, "currentColor", main) + "</g>";
      break;
    }
  }
  return s;
}

// --- agent ---------------------------------------------------------------------------

StyleResult stylize(const std::vector<ViewSpec>& views, const StyleRequest& request, const provider::Provider& provider,
                    const std::vector<std::string>& knowledge) {
  StyleResult out;
  const auto kind = required_palette_kind(views);
  RepairResult pal;
  if (request.preset) {
    pal = repair_palette(preset_palette(*request.preset, kind));
  } else if (request.current_palette && request.current_palette->kind == kind &&
             palette_problems(*request.current_palette).empty()) {
    pal.palette = *request.current_palette;
  } else {
    pal = recommend_palette(request.domain, request.theme_hint, kind, provider, knowledge);
  }
  out.diagnostics = std::move(pal.diagnostics);
  out.style.palette = std::move(pal.palette);
  out.style.theme_color = extract_theme_color(out.style.palette);
  const auto theme = out.style.theme_color;
  out.style.embellishments = {
      generate_embellishment(EmbellishmentKind::Border, theme, mix_seed(request.seed, "border")).spec,
      generate_embellishment(EmbellishmentKind::Divider, theme, mix_seed(request.seed, "divider")).spec,
      generate_embellishment(EmbellishmentKind::Icon, theme, mix_seed(request.seed, "icon"),
                             glyph_for_domain(request.domain))
          .spec};
  return out;
}

}  // namespace dashgen::stylization
