#include "dashgen/dsl/types.hpp"

#include <cstdio>

namespace dashgen {

std::string to_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

const Field* SimulatedDataset::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::optional<std::size_t> SimulatedDataset::field_index(std::string_view name) const {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].name == name) return i;
  }
  return std::nullopt;
}

namespace {
void collect_leaves(const LayoutNode& node, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    out.push_back(node.view_id);
    return;
  }
  for (const auto& child : node.children) collect_leaves(child, out);
}
}  // namespace

std::vector<std::string> LayoutTree::leaf_ids() const {
  std::vector<std::string> out;
  collect_leaves(root, out);
  return out;
}

const ViewSpec* DashboardSpec::find_view(std::string_view id) const {
  for (const auto& v : views) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

ViewSpec* DashboardSpec::find_view(std::string_view id) {
  for (auto& v : views) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

}  // namespace dashgen
