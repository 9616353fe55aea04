#include <algorithm>
#include <charconv>
#include <numeric>

#include "dashgen/dsl/dsl.hpp"

namespace dashgen::dsl {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& target) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= target.size()) {
    const auto end = target.find('/', start);
    parts.push_back(target.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return parts;
}

ViewSpec& view_at(DashboardSpec& spec, const std::vector<std::string>& parts, const std::string& target) {
  if (parts.size() < 2 || parts[0] != "views") throw TargetNotFound("target '" + target + "' is not a view path");
  auto* view = spec.find_view(parts[1]);
  if (view == nullptr) throw TargetNotFound("no view '" + parts[1] + "'");
  return *view;
}

ChartSpec& chart_at(ViewSpec& view, const std::vector<std::string>& parts, const std::string& target) {
  if (parts.size() < 4 || parts[2] != "charts") throw TargetNotFound("target '" + target + "' is not a chart path");
  std::size_t index = 0;
  const auto& s = parts[3];
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), index);
  if (ec != std::errc{} || ptr != s.data() + s.size() || index >= view.charts.size()) {
    throw TargetNotFound("no chart " + s + " in view '" + view.id + "'");
  }
  return view.charts[index];
}

void require_parts(const std::vector<std::string>& parts, std::size_t n, const std::string& target) {
  if (parts.size() != n) throw TargetNotFound("target '" + target + "' has the wrong shape for this operation");
}

void check_payload(const json& payload, std::string_view definition) {
  auto violations = validate_fragment(payload, definition, "payload");
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

void normalize(std::vector<LayoutNode>& siblings) {
  const double total = std::accumulate(siblings.begin(), siblings.end(), 0.0,
                                       [](double acc, const LayoutNode& n) { return acc + n.fraction; });
  if (total <= 0) return;
  for (auto& n : siblings) n.fraction /= total;
}

// Removes the leaf for `id`; prunes groups left empty and renormalises the
// remaining siblings at each level touched.
bool remove_leaf(LayoutNode& node, const std::string& id) {
  for (auto it = node.children.begin(); it != node.children.end(); ++it) {
    if (it->is_leaf() && it->view_id == id) {
      node.children.erase(it);
      normalize(node.children);
      return true;
    }
    if (!it->is_leaf() && remove_leaf(*it, id)) {
      if (it->children.empty()) {
        node.children.erase(it);
      }
      normalize(node.children);
      return true;
    }
  }
  return false;
}

void rename_in_encoding(ChartSpec& chart, const std::string& from, const std::string& to) {
  for (auto& [channel, field] : chart.encoding) {
    if (field == from) field = to;
  }
}

}  // namespace

json to_json(const SpecPatch& p) {
  return {{"operation", enum_name(p.operation)}, {"target", p.target}, {"payload", p.payload}};
}

SpecPatch patch_from_json(const json& j) {
  if (!j.is_object() || !j.contains("operation") || !j.contains("target") ||
      !j["operation"].is_string() || !j["target"].is_string()) {
    throw ValidationError({{"schema", "patch", "patch needs string 'operation' and 'target'"}});
  }
  auto op = enum_from<PatchOp>(j["operation"].get<std::string>());
  if (!op) {
    throw ValidationError({{"schema", "patch.operation",
                            "unknown operation '" + j["operation"].get<std::string>() + "'"}});
  }
  return {*op, j["target"].get<std::string>(), j.value("payload", json())};
}

DashboardSpec apply_patch(const DashboardSpec& spec, const SpecPatch& patch) {
  DashboardSpec out = spec;
  const auto parts = split_path(patch.target);
  const auto& target = patch.target;

  switch (patch.operation) {
    case PatchOp::AddView: {
      if (target != "views") throw TargetNotFound("AddView targets 'views', got '" + target + "'");
      check_payload(patch.payload, "view");
      auto view = view_from_json(patch.payload);
      if (out.find_view(view.id) != nullptr) {
        throw InvariantViolation("duplicate-view-id: view '" + view.id + "' already exists");
      }
      // New view becomes a level-1 leaf taking an equal share.
      auto& level1 = out.layout.root.children;
      const double share = 1.0 / static_cast<double>(level1.size() + 1);
      for (auto& n : level1) n.fraction *= (1.0 - share);
      level1.push_back(LayoutNode::leaf(view.id, share));
      out.views.push_back(std::move(view));
      break;
    }
    case PatchOp::DeleteView: {
      require_parts(parts, 2, target);
      const auto& view = view_at(out, parts, target);
      if (out.views.size() == 1) {
        throw InvariantViolation("views-non-empty: cannot delete the only view");
      }
      const std::string id = view.id;
      std::erase_if(out.views, [&](const ViewSpec& v) { return v.id == id; });
      remove_leaf(out.layout.root, id);
      break;
    }
    case PatchOp::ReplaceChartType: {
      require_parts(parts, 4, target);
      auto& chart = chart_at(view_at(out, parts, target), parts, target);
      if (!patch.payload.is_string()) throw ValidationError({{"schema", "payload", "expected a chart type name"}});
      auto type = enum_from<ChartType>(patch.payload.get<std::string>());
      if (!type) throw ValidationError({{"schema", "payload", "unknown chart type " + patch.payload.dump()}});
      chart.chart_type = *type;
      break;
    }
    case PatchOp::EditTitle: {
      if (!patch.payload.is_string()) throw ValidationError({{"schema", "payload", "expected title text"}});
      if (target == "title") {
        out.title = patch.payload.get<std::string>();
      } else {
        require_parts(parts, 2, target);
        view_at(out, parts, target).title = patch.payload.get<std::string>();
      }
      break;
    }
    case PatchOp::EditDatasetField: {
      require_parts(parts, 6, target);
      auto& chart = chart_at(view_at(out, parts, target), parts, target);
      if (parts[4] != "fields") throw TargetNotFound("target '" + target + "' is not a field path");
      auto index = chart.dataset.field_index(parts[5]);
      if (!index) throw TargetNotFound("no field '" + parts[5] + "'");
      if (!patch.payload.is_object() || !patch.payload.contains("name") || !patch.payload["name"].is_string() ||
          patch.payload["name"].get<std::string>().empty()) {
        throw ValidationError({{"schema", "payload", "expected {\"name\": text, \"unit\"?: text}"}});
      }
      const auto new_name = patch.payload["name"].get<std::string>();
      auto existing = chart.dataset.field_index(new_name);
      if (existing && *existing != *index) {
        throw InvariantViolation("field '" + new_name + "' already exists in the dataset");
      }
      auto& field = chart.dataset.fields[*index];
      rename_in_encoding(chart, field.name, new_name);
      field.name = new_name;
      if (patch.payload.contains("unit")) {
        const auto& unit = patch.payload["unit"];
        if (unit.is_null()) {
          field.unit.reset();
        } else if (unit.is_string()) {
          field.unit = unit.get<std::string>();
        } else {
          throw ValidationError({{"schema", "payload.unit", "expected text or null"}});
        }
      }
      break;
    }
    case PatchOp::ReplaceLayout: {
      if (target != "layout") throw TargetNotFound("ReplaceLayout targets 'layout', got '" + target + "'");
      check_payload(patch.payload, "layout");
      out.layout = layout_from_json(patch.payload);
      break;
    }
    case PatchOp::ReplaceStyle: {
      if (target != "style") throw TargetNotFound("ReplaceStyle targets 'style', got '" + target + "'");
      check_payload(patch.payload, "style");
      out.style = style_from_json(patch.payload);
      break;
    }
  }

  auto violations = validate(out);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw InvariantViolation(v.rule + " at " + v.path + ": " + v.message);
  }
  return out;
}

}  // namespace dashgen::dsl
