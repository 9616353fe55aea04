#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dashgen/dsl/types.hpp"
#include "dashgen/evaluator/evaluator.hpp"
#include "dashgen/provider/provider.hpp"
#include "json.hpp"

namespace dashgen {

enum class KnowledgeKind { DesignPattern, TaskRule, LayoutTemplate, AcceptedPrototype };

template <>
struct EnumTraits<KnowledgeKind> {
  static constexpr std::array names{"DesignPattern", "TaskRule", "LayoutTemplate", "AcceptedPrototype"};
};

}  // namespace dashgen

namespace dashgen::knowledge {

struct KnowledgeDoc {
  std::string id;
  KnowledgeKind kind = KnowledgeKind::DesignPattern;
  std::string text;
  std::optional<nlohmann::json> payload;
  std::vector<double> embedding;
};

nlohmann::json to_json(const KnowledgeDoc& d);
KnowledgeDoc doc_from_json(const nlohmann::json& j);

/// Unit-norm embedding through the provider. Throws EmptyInput for blank
/// text, ProviderError for backend failures or malformed vectors.
std::vector<double> embed_text(std::string_view text, const provider::Provider& provider);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct Hit {
  std::string id;
  double score = 0;
};

/// Exact cosine scan. Descending score, ties by doc id; min(k, size) hits.
/// Throws InvariantViolation when k == 0 or a dimension differs.
std::vector<Hit> rank(const std::vector<double>& query, const std::vector<KnowledgeDoc>& docs, std::size_t k);

/// Bundled seed documents, not yet embedded.
std::vector<KnowledgeDoc> seed_documents();

/// Flat vector index over knowledge documents. Retrievals read an immutable
/// snapshot; additions are serialized and, with a backing file, persisted
/// atomically before the new snapshot is published.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::shared_ptr<const provider::Provider> provider,
                         std::optional<std::filesystem::path> file = std::nullopt);

  /// Loads `file` when it exists, otherwise embeds the seed documents and
  /// writes the file. Throws StorageError for unreadable or mismatched files.
  static std::shared_ptr<KnowledgeBase> open(std::shared_ptr<const provider::Provider> provider,
                                             std::optional<std::filesystem::path> file);

  std::size_t size() const;
  std::size_t dimension() const;
  std::vector<KnowledgeDoc> documents() const;
  std::optional<KnowledgeDoc> find(const std::string& id) const;

  /// Embeds when the doc has no vector. Throws InvariantViolation on
  /// duplicate ids, empty text or wrong dimension.
  void add(KnowledgeDoc doc);
  void add_all(std::vector<KnowledgeDoc> docs);

  /// Throws InvariantViolation for k == 0 or an empty index.
  std::vector<Hit> retrieve_topk(std::string_view query, std::size_t k) const;
  /// Texts of the top-k documents, for prompt context.
  std::vector<std::string> context_for(std::string_view query, std::size_t k) const;

  /// Appends an AcceptedPrototype doc for a spec that passed evaluation.
  /// Throws EvaluationRequired when `verdict` is missing or failed.
  KnowledgeDoc enrich(const DashboardSpec& accepted, const std::string& summary,
                      const std::optional<evaluator::Verdict>& verdict);

  /// Versioned JSON document; identical content gives identical bytes.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;
  static std::vector<KnowledgeDoc> parse(const std::string& bytes, std::size_t expected_dimension);

 private:
  using Snapshot = std::vector<KnowledgeDoc>;
  std::shared_ptr<const Snapshot> snapshot() const;
  void publish(std::vector<KnowledgeDoc> added);

  std::shared_ptr<const provider::Provider> provider_;
  std::optional<std::filesystem::path> file_;
  mutable std::mutex snapshot_mutex_;
  std::mutex writer_mutex_;
  std::shared_ptr<const Snapshot> docs_;
};

}  // namespace dashgen::knowledge
