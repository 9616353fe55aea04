#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dashgen/common/text.hpp"
#include "dashgen/dsl/types.hpp"
#include "dashgen/knowledge/knowledge.hpp"
#include "dashgen/provider/provider.hpp"
#include "dashgen/service/pipeline.hpp"
#include "json.hpp"

namespace dashgen {

enum class InteractionMethod { TextMessage, QuickAction, LayoutSelection, StyleSelection, ContentEdit };

template <>
struct EnumTraits<InteractionMethod> {
  static constexpr std::array names{"TextMessage", "QuickAction", "LayoutSelection", "StyleSelection", "ContentEdit"};
};

}  // namespace dashgen

namespace dashgen::service {

struct HistoryEntry {
  std::string id;  // "e0001", ...
  InteractionMethod method = InteractionMethod::TextMessage;
  std::string summary;
  std::string timestamp;     // UTC, millisecond precision
  std::string prototype_id;  // digest of the canonical spec
  std::string asset_hash;    // rendered document
  std::string thumbnail_hash;
  nlohmann::json request;    // what triggered the entry, for replay
  std::vector<std::string> task_summaries;
};

/// Wire form shown to clients (history and message responses).
nlohmann::json public_json(const HistoryEntry& e);

struct SessionLog {
  std::string id;
  std::string created;
  std::uint64_t seed = 0;
  std::vector<HistoryEntry> entries;
};

/// Append-only JSONL file per session under <dir>/sessions and a
/// content-addressed asset directory under <dir>/assets. A torn final line
/// (crash mid-append) is ignored on load.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path data_dir);

  const std::filesystem::path& data_dir() const { return dir_; }

  /// Next sequential id ("s000001", ...). Throws StorageError.
  std::string create(const std::string& created, std::uint64_t seed);
  bool exists(const std::string& id) const;
  /// Throws SessionNotFound, StorageError.
  SessionLog load(const std::string& id) const;
  /// Throws StorageError.
  void append(const std::string& id, const HistoryEntry& entry);

  /// Writes `bytes` as <hex digest><ext> unless present; returns the digest.
  std::string put_asset(const std::string& bytes, const std::string& ext);
  std::optional<std::string> read_asset(const std::string& name) const;

  static SessionLog parse_log(const std::string& bytes);
  static std::string entry_record(const HistoryEntry& e);

 private:
  std::filesystem::path session_file(const std::string& id) const;

  std::filesystem::path dir_;
  std::mutex create_mu_;
};

/// Logical: every session starts at 2025-01-01T00:00:00.000Z and advances one
/// second per event, so mock runs are byte-reproducible. System: wall clock,
/// nudged forward so timestamps within a session stay strictly increasing.
enum class ClockMode { Logical, System };

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  std::uint64_t seed = 42;
  ClockMode clock = ClockMode::Logical;
  PipelineOptions pipeline;
  std::size_t context_turns = 5;
  double thumbnail_edge = 320;
};

struct Reply {
  int status = 200;
  nlohmann::json body;
  std::string content_type = "application/json";
  std::string raw;  // non-JSON payloads (assets)

  std::string text() const { return raw.empty() ? body.dump() : raw; }
};

/// HTTP status for an engine error code.
int status_for(const std::exception& e);
Reply error_reply(const std::exception& e);

class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<const provider::Provider> provider,
          std::shared_ptr<knowledge::KnowledgeBase> knowledge);

  nlohmann::json create_session();
  nlohmann::json post_message(const std::string& session, const std::string& text, bool quick_action = false);
  /// {"action": "ModifyLayout", "template"} | {"action": "ModifyStyle",
  /// "palette"} | {"action": "ModifyContent", "patch"}.
  nlohmann::json apply_quick_action(const std::string& session, const nlohmann::json& action);
  nlohmann::json history(const std::string& session);
  nlohmann::json accept(const std::string& session, const std::optional<std::string>& summary);
  std::optional<DashboardSpec> current_spec(const std::string& session);

  /// Routes one request; errors become JSON error replies.
  Reply dispatch(const std::string& method, const std::string& path, const std::string& body);

  const SessionStore& store() const { return store_; }

 private:
  struct Session {
    std::mutex mu;
    SessionLog log;
    std::optional<DashboardSpec> current;
  };

  std::shared_ptr<Session> session(const std::string& id);
  std::string timestamp(const Session& s) const;
  nlohmann::json run(const std::string& id, PipelineInput input, InteractionMethod method, nlohmann::json request);

  ServiceConfig config_;
  std::shared_ptr<const provider::Provider> provider_;
  std::shared_ptr<knowledge::KnowledgeBase> knowledge_;
  SessionStore store_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Converts an actions-endpoint body to a planner selection id and the
/// history method. Throws ValidationError.
std::pair<std::string, InteractionMethod> action_selection(const nlohmann::json& action);

struct ReplayStep {
  std::string entry_id;
  std::string recorded;
  std::string reproduced;
  bool ok() const { return recorded == reproduced; }
};

/// Re-runs every recorded request of a session log against `provider` and
/// compares the resulting prototype ids.
std::vector<ReplayStep> replay_session(const std::filesystem::path& log_file, const provider::Provider& provider,
                                       const ServiceConfig& config);

}  // namespace dashgen::service
