#include "dashgen/common/resources.hpp"

#include <map>
#include <memory>
#include <mutex>

#include "dashgen/common/errors.hpp"

namespace dashgen::detail {
struct EmbeddedFile {
  const char* path;
  const unsigned char* data;
  std::size_t size;
};
extern const EmbeddedFile kEmbeddedFiles[];
extern const std::size_t kEmbeddedFileCount;
}  // namespace dashgen::detail

namespace dashgen::resources {

namespace {

const detail::EmbeddedFile* find(std::string_view path) {
  for (std::size_t i = 0; i < detail::kEmbeddedFileCount; ++i) {
    if (path == detail::kEmbeddedFiles[i].path) return &detail::kEmbeddedFiles[i];
  }
  return nullptr;
}

}  // namespace

bool exists(std::string_view path) { return find(path) != nullptr; }

std::string_view text(std::string_view path) {
  const auto* file = find(path);
  if (file == nullptr) throw ResourceNotFound("no bundled resource '" + std::string(path) + "'");
  return {reinterpret_cast<const char*>(file->data), file->size};
}

const nlohmann::json& json(std::string_view path) {
  static std::mutex mutex;
  static std::map<std::string, std::unique_ptr<nlohmann::json>, std::less<>> cache;

  std::lock_guard lock(mutex);
  if (auto it = cache.find(path); it != cache.end()) return *it->second;
  auto parsed = std::make_unique<nlohmann::json>(nlohmann::json::parse(text(path)));
  auto& slot = cache[std::string(path)];
  slot = std::move(parsed);
  return *slot;
}

std::vector<std::string> list(std::string_view prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < detail::kEmbeddedFileCount; ++i) {
    std::string_view p = detail::kEmbeddedFiles[i].path;
    if (p.substr(0, prefix.size()) == prefix) out.emplace_back(p);
  }
  return out;
}

}  // namespace dashgen::resources
