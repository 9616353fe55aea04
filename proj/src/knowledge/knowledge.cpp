#include "dashgen/knowledge/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"
#include "dashgen/dsl/dsl.hpp"

namespace dashgen::knowledge {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "dashgen-knowledge-index";
constexpr int kVersion = 1;

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

json to_json(const KnowledgeDoc& d) {
  json j = {{"id", d.id}, {"kind", enum_name(d.kind)}, {"text", d.text}};
  if (d.payload) j["payload"] = *d.payload;
  j["embedding"] = d.embedding;
  return j;
}

KnowledgeDoc doc_from_json(const json& j) {
  KnowledgeDoc d;
  d.id = j.at("id").get<std::string>();
  const auto kind = enum_from<KnowledgeKind>(j.at("kind").get<std::string>());
  if (!kind) throw InvariantViolation("unknown knowledge kind '" + j.at("kind").get<std::string>() + "'");
  d.kind = *kind;
  d.text = j.at("text").get<std::string>();
  if (j.contains("payload") && !j["payload"].is_null()) d.payload = j["payload"];
  if (j.contains("embedding")) d.embedding = j["embedding"].get<std::vector<double>>();
  return d;
}

std::vector<double> embed_text(std::string_view text, const provider::Provider& provider) {
  if (blank(text)) throw EmptyInput("cannot embed empty text");
  auto v = provider.embed(text);
  if (v.size() != provider.embedding_dimension()) {
    throw ProviderError("embedding has " + std::to_string(v.size()) + " dimensions, expected " +
                            std::to_string(provider.embedding_dimension()),
                        1);
  }
  double norm = 0;
  for (double x : v) {
    if (!std::isfinite(x)) throw ProviderError("embedding contains non-finite values", 1);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm == 0) throw ProviderError("embedding is the zero vector", 1);
  for (auto& x : v) x /= norm;
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvariantViolation("vector dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Hit> rank(const std::vector<double>& query, const std::vector<KnowledgeDoc>& docs, std::size_t k) {
  if (k == 0) throw InvariantViolation("k must be at least 1");
  std::vector<Hit> hits;
  hits.reserve(docs.size());
  for (const auto& d : docs) hits.push_back({d.id, cosine(query, d.embedding)});
  std::sort(hits.begin(), hits.end(),
            [](const Hit& a, const Hit& b) { return a.score != b.score ? a.score > b.score : a.id < b.id; });
  // Equal cosines computed from different vectors can differ in the last
  // bits; scores within kTieEpsilon of a run's first score order by id.
  constexpr double kTieEpsilon = 1e-12;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i + 1;
    while (j < hits.size() && hits[i].score - hits[j].score <= kTieEpsilon) ++j;
    std::sort(hits.begin() + static_cast<std::ptrdiff_t>(i), hits.begin() + static_cast<std::ptrdiff_t>(j),
              [](const Hit& a, const Hit& b) { return a.id < b.id; });
    i = j;
  }
  hits.resize(std::min(k, hits.size()));
  return hits;
}

std::vector<KnowledgeDoc> seed_documents() {
  std::vector<KnowledgeDoc> out;
  for (const auto& path : resources::list("knowledge/")) out.push_back(doc_from_json(resources::json(path)));
  std::sort(out.begin(), out.end(), [](const KnowledgeDoc& a, const KnowledgeDoc& b) { return a.id < b.id; });
  return out;
}

// --- KnowledgeBase ------------------------------------------------------------------

KnowledgeBase::KnowledgeBase(std::shared_ptr<const provider::Provider> provider,
                             std::optional<std::filesystem::path> file)
    : provider_(std::move(provider)), file_(std::move(file)), docs_(std::make_shared<const Snapshot>()) {}

std::shared_ptr<KnowledgeBase> KnowledgeBase::open(std::shared_ptr<const provider::Provider> provider,
                                                   std::optional<std::filesystem::path> file) {
  auto kb = std::make_shared<KnowledgeBase>(provider, file);
  if (file && std::filesystem::exists(*file)) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw StorageError("cannot read knowledge index " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    auto docs = parse(ss.str(), provider->embedding_dimension());
    std::lock_guard lock(kb->snapshot_mutex_);
    kb->docs_ = std::make_shared<const Snapshot>(std::move(docs));
  } else {
    kb->add_all(seed_documents());
  }
  return kb;
}

std::shared_ptr<const KnowledgeBase::Snapshot> KnowledgeBase::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return docs_;
}

std::size_t KnowledgeBase::size() const { return snapshot()->size(); }

std::size_t KnowledgeBase::dimension() const { return provider_->embedding_dimension(); }

std::vector<KnowledgeDoc> KnowledgeBase::documents() const { return *snapshot(); }

std::optional<KnowledgeDoc> KnowledgeBase::find(const std::string& id) const {
  for (const auto& d : *snapshot()) {
    if (d.id == id) return d;
  }
  return std::nullopt;
}

void KnowledgeBase::add(KnowledgeDoc doc) {
  std::vector<KnowledgeDoc> one;
  one.push_back(std::move(doc));
  add_all(std::move(one));
}

void KnowledgeBase::add_all(std::vector<KnowledgeDoc> docs) {
  std::lock_guard writer(writer_mutex_);
  publish(std::move(docs));
}

// Caller holds writer_mutex_.
void KnowledgeBase::publish(std::vector<KnowledgeDoc> added) {
  auto current = snapshot();
  std::set<std::string> ids;
  for (const auto& d : *current) ids.insert(d.id);
  for (auto& d : added) {
    if (d.id.empty()) throw InvariantViolation("knowledge doc needs an id");
    if (blank(d.text)) throw InvariantViolation("knowledge doc '" + d.id + "' has no text");
    if (!ids.insert(d.id).second) throw InvariantViolation("duplicate knowledge doc id '" + d.id + "'");
    if (d.embedding.empty()) d.embedding = embed_text(d.text, *provider_);
    if (d.embedding.size() != dimension()) {
      throw InvariantViolation("knowledge doc '" + d.id + "' has dimension " + std::to_string(d.embedding.size()));
    }
    for (double x : d.embedding) {
      if (!std::isfinite(x)) throw InvariantViolation("knowledge doc '" + d.id + "' has a non-finite vector");
    }
  }
  auto next = std::make_shared<Snapshot>(*current);
  next->insert(next->end(), std::make_move_iterator(added.begin()), std::make_move_iterator(added.end()));
  if (file_) {
    KnowledgeBase staged(provider_);
    staged.docs_ = next;
    staged.save(*file_);
  }
  std::lock_guard lock(snapshot_mutex_);
  docs_ = std::move(next);
}

std::vector<Hit> KnowledgeBase::retrieve_topk(std::string_view query, std::size_t k) const {
  auto docs = snapshot();
  if (k == 0) throw InvariantViolation("k must be at least 1");
  if (docs->empty()) throw InvariantViolation("knowledge index is empty");
  return rank(embed_text(query, *provider_), *docs, k);
}

std::vector<std::string> KnowledgeBase::context_for(std::string_view query, std::size_t k) const {
  auto docs = snapshot();
  if (docs->empty() || blank(query)) return {};
  std::vector<std::string> out;
  for (const auto& hit : rank(embed_text(query, *provider_), *docs, k)) {
    for (const auto& d : *docs) {
      if (d.id == hit.id) out.push_back(d.text);
    }
  }
  return out;
}

KnowledgeDoc KnowledgeBase::enrich(const DashboardSpec& accepted, const std::string& summary,
                                   const std::optional<evaluator::Verdict>& verdict) {
  if (!verdict) throw EvaluationRequired("prototype was never evaluated");
  if (!verdict->passed) throw EvaluationRequired("prototype failed evaluation");
  if (blank(summary)) throw EmptyInput("accepted prototype needs a summary");

  std::string text = summary + "\nDomain: " + accepted.domain + ". Views:";
  for (const auto& v : accepted.views) {
    text += " " + v.title + " (" + std::string(enum_name(v.analysis_task));
    for (const auto& c : v.charts) text += ", " + std::string(enum_name(c.chart_type));
    text += ");";
  }

  std::lock_guard writer(writer_mutex_);
  std::size_t accepted_count = 0;
  for (const auto& d : *snapshot()) accepted_count += d.kind == KnowledgeKind::AcceptedPrototype;
  char id[32];
  std::snprintf(id, sizeof id, "accepted-%04zu", accepted_count + 1);

  KnowledgeDoc doc;
  doc.id = id;
  doc.kind = KnowledgeKind::AcceptedPrototype;
  doc.text = text;
  doc.payload = dsl::to_json(accepted);
  publish({doc});
  return *find(doc.id);
}

std::string KnowledgeBase::serialize() const {
  json j = {{"format", kFormat}, {"version", kVersion}, {"dimension", dimension()}, {"docs", json::array()}};
  for (const auto& d : *snapshot()) j["docs"].push_back(to_json(d));
  return j.dump() + "\n";
}

void KnowledgeBase::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << bytes;
    out.flush();
    if (!out) throw StorageError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot replace " + path.string() + ": " + ec.message());
}

std::vector<KnowledgeDoc> KnowledgeBase::parse(const std::string& bytes, std::size_t expected_dimension) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw StorageError(std::string("knowledge index is not JSON: ") + e.what());
  }
  if (j.value("format", std::string()) != kFormat || j.value("version", 0) != kVersion) {
    throw StorageError("knowledge index has an unknown format header");
  }
  if (j.value("dimension", std::size_t{0}) != expected_dimension) {
    throw StorageError("knowledge index dimension " + std::to_string(j.value("dimension", 0)) +
                       " does not match the embedder's " + std::to_string(expected_dimension));
  }
  std::vector<KnowledgeDoc> out;
  std::set<std::string> ids;
  try {
    for (const auto& d : j.at("docs")) {
      auto doc = doc_from_json(d);
      if (doc.embedding.size() != expected_dimension) throw StorageError("doc '" + doc.id + "' has a wrong-size vector");
      if (!ids.insert(doc.id).second) throw StorageError("duplicate doc id '" + doc.id + "'");
      out.push_back(std::move(doc));
    }
  } catch (const json::exception& e) {
    throw StorageError(std::string("malformed knowledge index: ") + e.what());
  } catch (const InvariantViolation& e) {
    throw StorageError(e.what());
  }
  return out;
}

}  // namespace dashgen::knowledge
