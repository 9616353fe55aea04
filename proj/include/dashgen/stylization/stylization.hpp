#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dashgen/dsl/types.hpp"
#include "dashgen/provider/provider.hpp"

namespace dashgen::stylization {

// --- Color science -----------------------------------------------------------

/// CIELAB under D65.
struct Lab {
  double L = 0;
  double a = 0;
  double b = 0;
};

Lab srgb_to_lab(Rgb c);
/// Out-of-gamut values are clipped per channel.
Rgb lab_to_srgb(const Lab& lab);
double ciede2000(const Lab& x, const Lab& y);
double delta_e(Rgb x, Rgb y);

/// "#rrggbb" or "rrggbb". Throws InvariantViolation.
Rgb parse_hex(std::string_view hex);

/// Nearest entry of the shipped named-color table.
std::string color_name(Rgb c);

// --- Palettes ----------------------------------------------------------------

struct PaletteRules {
  double categorical_min_delta_e = 15.0;
  std::size_t categorical_min = 6;
  std::size_t categorical_max = 10;
  std::size_t sequential_min = 5;
  std::size_t sequential_max = 9;
  double repair_lightness_step = 3.0;
  int repair_max_rounds = 60;
  std::string fallback_palette = "deep-blue";

  static const PaletteRules& shipped();
};

/// Empty when the palette satisfies its kind's size, distance or
/// monotonicity rules.
std::vector<std::string> palette_problems(const Palette& palette, const PaletteRules& rules = PaletteRules::shipped());

struct RepairResult {
  Palette palette;
  std::vector<std::string> diagnostics;
};

/// Resizes and nudges failing colors along lightness until the rules hold.
/// Falls back to the configured preset when nudging runs out of rounds.
RepairResult repair_palette(Palette palette, const PaletteRules& rules = PaletteRules::shipped());

std::vector<std::string> preset_names();
/// Throws UnknownTemplate.
Palette preset_palette(const std::string& name, PaletteKind kind);
/// Preset whose keywords best match the text; the fallback preset when
/// nothing matches.
std::string match_preset(const std::string& domain, const std::string& theme_hint);

/// Categorical when any chart color-encodes a dimension field.
PaletteKind required_palette_kind(const std::vector<ViewSpec>& views);

/// Asks the provider (stage "palette") for a preset name or explicit colors,
/// then validates and repairs. Unusable answers fall back to keyword
/// matching with a diagnostic. Throws ProviderError.
RepairResult recommend_palette(const std::string& domain, const std::string& theme_hint, PaletteKind kind,
                               const provider::Provider& provider, const std::vector<std::string>& knowledge = {});

/// Categorical: first color. Sequential: stop floor((n-1)/2).
Rgb extract_theme_color(const Palette& palette);

/// Color for series `index`, cycling through the palette.
Rgb series_color(const Palette& palette, std::size_t index);

// --- Embellishments ----------------------------------------------------------

struct Glyph {
  std::string id;
  std::vector<std::string> keywords;
  std::string svg;  // <g> body on a 24x24 canvas; fills use currentColor
};

const std::vector<Glyph>& glyphs();
const Glyph* find_glyph(std::string_view id);
/// Glyph whose keywords match the domain, "gauge" otherwise.
std::string glyph_for_domain(const std::string& domain);

struct Embellishment {
  EmbellishmentSpec spec;
  std::string svg;  // fragment in unit coordinates, see render_embellishment
};

/// Pure in (kind, theme_color, seed). Icons use `glyph_id` when given,
/// otherwise a glyph picked by the seed.
Embellishment generate_embellishment(EmbellishmentKind kind, Rgb theme_color, std::uint64_t seed,
                                     std::optional<std::string> glyph_id = std::nullopt);

/// SVG <g> fragment for a spec. Border and Divider draw in a 1x1 box with
/// non-scaling strokes; Icon draws on a 24x24 canvas. Throws
/// InvariantViolation for unknown glyphs or non-positive strokes.
std::string render_embellishment(const EmbellishmentSpec& spec);

// --- Agent ---------------------------------------------------------------------

struct StyleRequest {
  std::string domain = "generic";
  std::string theme_hint;
  std::uint64_t seed = 0;
  /// Reused when it is still valid for the views' data kinds.
  std::optional<Palette> current_palette;
  /// Forces this preset instead of asking the provider.
  std::optional<std::string> preset;
};

struct StyleResult {
  StyleSpec style;
  std::vector<std::string> diagnostics;
};

/// One global palette plus border, divider and domain icon embellishments.
StyleResult stylize(const std::vector<ViewSpec>& views, const StyleRequest& request,
                    const provider::Provider& provider, const std::vector<std::string>& knowledge = {});

}  // namespace dashgen::stylization
