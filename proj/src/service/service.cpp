#include "dashgen/service/service.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "dashgen/assembly/assembly.hpp"
#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/dsl/dsl.hpp"
#include "dashgen/renderer/renderer.hpp"
#include "dashgen/stylization/stylization.hpp"

namespace dashgen::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const SystemTime kLogicalEpoch = parse_utc("2025-01-01T00:00:00.000Z");

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StorageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& bytes) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << bytes;
    out.flush();
    if (!out) throw StorageError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw StorageError("cannot move " + tmp.string() + ": " + ec.message());
}

bool valid_session_id(const std::string& id) {
  static const std::regex re("s[0-9]{6}");
  return std::regex_match(id, re);
}

json entry_json(const HistoryEntry& e) {
  return {{"type", "entry"},
          {"id", e.id},
          {"interaction_method", enum_name(e.method)},
          {"modification_summary", e.summary},
          {"timestamp", e.timestamp},
          {"prototype_id", e.prototype_id},
          {"asset_hash", e.asset_hash},
          {"thumbnail_hash", e.thumbnail_hash},
          {"request", e.request},
          {"task_summaries", e.task_summaries}};
}

HistoryEntry entry_from_json(const json& j) {
  HistoryEntry e;
  e.id = j.at("id").get<std::string>();
  const auto method = enum_from<InteractionMethod>(j.at("interaction_method").get<std::string>());
  if (!method) throw StorageError("unknown interaction method in session log");
  e.method = *method;
  e.summary = j.at("modification_summary").get<std::string>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.prototype_id = j.at("prototype_id").get<std::string>();
  e.asset_hash = j.at("asset_hash").get<std::string>();
  e.thumbnail_hash = j.at("thumbnail_hash").get<std::string>();
  e.request = j.at("request");
  e.task_summaries = j.at("task_summaries").get<std::vector<std::string>>();
  return e;
}

std::vector<planner::ConversationTurn> conversation(const SessionLog& log, std::size_t turns) {
  std::vector<planner::ConversationTurn> out;
  for (const auto& e : log.entries) {
    if (e.request.value("type", std::string()) != "message") continue;
    out.push_back({e.request.value("text", std::string()), e.task_summaries});
  }
  if (out.size() > turns) out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(turns));
  return out;
}

std::uint64_t interaction_seed(const SessionLog& log, std::size_t entry_number) {
  return mix_seed(log.seed, log.id + "#" + std::to_string(entry_number));
}

std::string entry_id(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "e%04zu", n);
  return buf;
}

PipelineInput input_for(const json& request) {
  PipelineInput in;
  const auto type = request.value("type", std::string());
  if (type == "message") {
    in.utterance = request.at("text").get<std::string>();
  } else if (type == "action") {
    in.selection = action_selection(request.at("action")).first;
  } else {
    throw StorageError("unknown request type '" + type + "' in session log");
  }
  return in;
}

std::string spec_digest(const DashboardSpec& spec) { return hex_digest(fnv1a64(dsl::serialize_spec(spec))); }

json tags() {
  return json::array({{{"id", "modify_layout"}, {"label", "Modify layout"}},
                      {{"id", "modify_style"}, {"label", "Adjust style"}},
                      {{"id", "modify_content"}, {"label", "Edit content"}}});
}

json violations_json(const std::vector<Violation>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back({{"rule", v.rule}, {"path", v.path}, {"message", v.message}});
  return out;
}

Reply problem(int status, const std::string& code, const std::string& message) {
  Reply r;
  r.status = status;
  r.body = {{"error", code}, {"message", message}};
  return r;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError({{"schema", "body", std::string("request body is not JSON: ") + e.what()}});
  }
}

}  // namespace

json public_json(const HistoryEntry& e) {
  return {{"id", e.id},
          {"interaction_method", enum_name(e.method)},
          {"modification_summary", e.summary},
          {"timestamp", e.timestamp},
          {"prototype_id", e.prototype_id},
          {"prototype_url", "/assets/" + e.asset_hash + ".svg"},
          {"thumbnail_url", "/assets/" + e.thumbnail_hash + ".svg"}};
}

// --- SessionStore ---------------------------------------------------------------

SessionStore::SessionStore(fs::path data_dir) : dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "sessions", ec);
  fs::create_directories(dir_ / "assets", ec);
  if (ec) throw StorageError("cannot create data directory " + dir_.string() + ": " + ec.message());
}

fs::path SessionStore::session_file(const std::string& id) const { return dir_ / "sessions" / (id + ".jsonl"); }

std::string SessionStore::create(const std::string& created, std::uint64_t seed) {
  std::lock_guard lock(create_mu_);
  int top = 0;
  for (const auto& f : fs::directory_iterator(dir_ / "sessions")) {
    const auto stem = f.path().stem().string();
    if (f.path().extension() == ".jsonl" && valid_session_id(stem)) top = std::max(top, std::stoi(stem.substr(1)));
  }
  char id[16];
  std::snprintf(id, sizeof id, "s%06d", top + 1);
  const json header = {{"type", "session"}, {"id", id}, {"created", created}, {"seed", seed}};
  write_atomic(session_file(id), header.dump() + "\n");
  return id;
}

bool SessionStore::exists(const std::string& id) const { return valid_session_id(id) && fs::exists(session_file(id)); }

SessionLog SessionStore::load(const std::string& id) const {
  if (!exists(id)) throw SessionNotFound("no session '" + id + "'");
  return parse_log(read_bytes(session_file(id)));
}

SessionLog SessionStore::parse_log(const std::string& bytes) {
  SessionLog log;
  std::size_t start = 0;
  bool header = false;
  while (start < bytes.size()) {
    const auto end = bytes.find('\n', start);
    if (end == std::string::npos) break;  // torn tail from an interrupted append
    const auto line = bytes.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw StorageError(std::string("corrupt session log line: ") + e.what());
    }
    try {
      if (j.at("type") == "session") {
        log.id = j.at("id").get<std::string>();
        log.created = j.at("created").get<std::string>();
        log.seed = j.at("seed").get<std::uint64_t>();
        header = true;
      } else {
        log.entries.push_back(entry_from_json(j));
      }
    } catch (const json::exception& e) {
      throw StorageError(std::string("malformed session log record: ") + e.what());
    }
  }
  if (!header) throw StorageError("session log has no header");
  return log;
}

std::string SessionStore::entry_record(const HistoryEntry& e) { return entry_json(e).dump() + "\n"; }

void SessionStore::append(const std::string& id, const HistoryEntry& entry) {
  std::ofstream out(session_file(id), std::ios::binary | std::ios::app);
  if (!out) throw StorageError("cannot open session log " + id);
  out << entry_record(entry);
  out.flush();
  if (!out) throw StorageError("cannot append to session log " + id);
}

std::string SessionStore::put_asset(const std::string& bytes, const std::string& ext) {
  const auto hash = hex_digest(fnv1a64(bytes));
  const auto path = dir_ / "assets" / (hash + ext);
  if (!fs::exists(path)) write_atomic(path, bytes);
  return hash;
}

std::optional<std::string> SessionStore::read_asset(const std::string& name) const {
  static const std::regex re("[0-9a-f]{16}(\\.svg|\\.dash\\.json)");
  if (!std::regex_match(name, re)) return std::nullopt;
  const auto path = dir_ / "assets" / name;
  if (!fs::exists(path)) return std::nullopt;
  return read_bytes(path);
}

// --- errors -------------------------------------------------------------------------

int status_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 500;
  static const std::map<std::string, int> table = {
      {"SessionNotFound", 404},   {"NoCurrentSpec", 409},     {"EvaluationRequired", 409},
      {"UnknownTemplate", 400},   {"ValidationError", 400},   {"SyntaxError", 400},
      {"TargetNotFound", 400},    {"InvariantViolation", 400}, {"EmptyInput", 400},
      {"UnparsableIntent", 422},  {"PipelineFailed", 422},    {"TooManyViews", 422},
      {"ProviderError", 502},
  };
  auto it = table.find(err->code());
  return it == table.end() ? 500 : it->second;
}

Reply error_reply(const std::exception& e) {
  Reply r;
  r.status = status_for(e);
  const auto* err = dynamic_cast<const Error*>(&e);
  r.body = {{"error", err ? err->code() : std::string("InternalError")}, {"message", e.what()}};
  if (const auto* p = dynamic_cast<const PipelineFailed*>(&e)) r.body["violations"] = violations_json(p->violations());
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) r.body["violations"] = violations_json(v->violations());
  return r;
}

std::pair<std::string, InteractionMethod> action_selection(const json& action) {
  const auto kind = action.is_object() ? action.value("action", std::string()) : std::string();
  auto need = [&](const char* key, bool object) {
    if (!action.contains(key) || (object ? !action[key].is_object() : !action[key].is_string())) {
      throw ValidationError({{"schema", std::string("action.") + key, std::string("missing or mistyped '") + key + "'"}});
    }
  };
  if (kind == "ModifyLayout") {
    need("template", false);
    return {"modify_layout:" + action["template"].get<std::string>(), InteractionMethod::LayoutSelection};
  }
  if (kind == "ModifyStyle") {
    need("palette", false);
    return {"modify_style:" + action["palette"].get<std::string>(), InteractionMethod::StyleSelection};
  }
  if (kind == "ModifyContent") {
    need("patch", true);
    return {"modify_content:" + action["patch"].dump(), InteractionMethod::ContentEdit};
  }
  throw ValidationError({{"schema", "action.action", "expected ModifyLayout, ModifyStyle or ModifyContent"}});
}

// --- Service ------------------------------------------------------------------------

Service::Service(ServiceConfig config, std::shared_ptr<const provider::Provider> provider,
                 std::shared_ptr<knowledge::KnowledgeBase> knowledge)
    : config_(std::move(config)), provider_(std::move(provider)), knowledge_(std::move(knowledge)),
      store_(config_.data_dir) {}

std::string Service::timestamp(const Session& s) const {
  if (config_.clock == ClockMode::Logical) {
    return format_utc(kLogicalEpoch + std::chrono::seconds(s.log.entries.size() + 1));
  }
  auto now = std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
  const auto& last = s.log.entries.empty() ? s.log.created : s.log.entries.back().timestamp;
  if (!last.empty()) now = std::max(now, parse_utc(last) + std::chrono::milliseconds(1));
  return format_utc(now);
}

std::shared_ptr<Service::Session> Service::session(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  auto s = std::make_shared<Session>();
  s->log = store_.load(id);
  if (!s->log.entries.empty()) {
    const auto bytes = store_.read_asset(s->log.entries.back().prototype_id + ".dash.json");
    if (!bytes) throw StorageError("session " + id + " references a missing prototype");
    s->current = dsl::parse_spec(*bytes);
  }
  sessions_[id] = s;
  return s;
}

json Service::create_session() {
  std::string created;
  if (config_.clock == ClockMode::Logical) {
    created = format_utc(kLogicalEpoch);
  } else {
    created = format_utc(std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()));
  }
  const auto id = store_.create(created, config_.seed);
  session(id);
  return {{"session_id", id}, {"created", created}, {"history", json::array()}};
}

json Service::run(const std::string& id, PipelineInput input, InteractionMethod method, json request) {
  auto s = session(id);
  std::lock_guard lock(s->mu);
  const auto number = s->log.entries.size() + 1;
  input.current = s->current;
  input.context = conversation(s->log, config_.context_turns);
  auto options = config_.pipeline;
  options.seed = interaction_seed(s->log, number);

  auto outcome = run_pipeline(input, *provider_, knowledge_.get(), options);
  const auto proto = renderer::render_dashboard(outcome.spec);
  const auto thumb = renderer::render_thumbnail(proto, config_.thumbnail_edge);

  HistoryEntry e;
  e.id = entry_id(number);
  e.method = method;
  e.summary = outcome.summary;
  e.timestamp = timestamp(*s);
  e.prototype_id = store_.put_asset(dsl::serialize_spec(outcome.spec), ".dash.json");
  e.asset_hash = store_.put_asset(proto.document, ".svg");
  e.thumbnail_hash = store_.put_asset(thumb.svg, ".svg");
  e.request = std::move(request);
  e.task_summaries = outcome.task_summaries;
  store_.append(id, e);
  s->log.entries.push_back(e);
  s->current = outcome.spec;

  json tasks = json::array();
  for (const auto& t : outcome.tasks) tasks.push_back(planner::to_json(t));
  return {{"session_id", id},
          {"entry", public_json(e)},
          {"spec", dsl::to_json(outcome.spec)},
          {"prototype",
           {{"id", e.prototype_id},
            {"content_hash", proto.hash_hex()},
            {"url", "/assets/" + e.asset_hash + ".svg"},
            {"width", proto.width},
            {"height", proto.height}}},
          {"thumbnail_url", "/assets/" + e.thumbnail_hash + ".svg"},
          {"verdict", evaluator::to_json(outcome.verdict)},
          {"tasks", tasks},
          {"plan", planner::to_json(outcome.plan)},
          {"iterations", outcome.iterations},
          {"diagnostics", outcome.diagnostics},
          {"tags", tags()}};
}

json Service::post_message(const std::string& id, const std::string& text, bool quick_action) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw EmptyInput("message text is empty");
  PipelineInput in;
  in.utterance = text;
  json request = {{"type", "message"}, {"text", text}};
  if (quick_action) request["quick_action"] = true;
  return run(id, std::move(in), quick_action ? InteractionMethod::QuickAction : InteractionMethod::TextMessage,
             std::move(request));
}

json Service::apply_quick_action(const std::string& id, const json& action) {
  auto s = session(id);
  {
    std::lock_guard lock(s->mu);
    if (!s->current) throw NoCurrentSpec("session '" + id + "' has no prototype yet");
  }
  auto [selection, method] = action_selection(action);
  PipelineInput in;
  in.selection = selection;
  return run(id, std::move(in), method, {{"type", "action"}, {"action", action}});
}

json Service::history(const std::string& id) {
  auto s = session(id);
  std::lock_guard lock(s->mu);
  json entries = json::array();
  for (const auto& e : s->log.entries) entries.push_back(public_json(e));
  return {{"session_id", id}, {"created", s->log.created}, {"entries", entries}};
}

std::optional<DashboardSpec> Service::current_spec(const std::string& id) {
  auto s = session(id);
  std::lock_guard lock(s->mu);
  return s->current;
}

json Service::accept(const std::string& id, const std::optional<std::string>& summary) {
  auto s = session(id);
  std::lock_guard lock(s->mu);
  if (!s->current) throw NoCurrentSpec("session '" + id + "' has no prototype to accept");
  if (!knowledge_) throw ConfigError("knowledge base is not configured");
  const auto text = summary.value_or(s->current->title + ". " + s->log.entries.back().summary);
  const auto doc = knowledge_->enrich(*s->current, text, evaluator::evaluate(*s->current));
  return {{"session_id", id}, {"doc_id", doc.id}, {"prototype_id", s->log.entries.back().prototype_id},
          {"knowledge_size", knowledge_->size()}};
}

Reply Service::dispatch(const std::string& method, const std::string& path, const std::string& body) {
  static const std::regex session_route("/sessions/([^/]+)/(messages|actions|accept|history)");
  static const std::regex asset_route("/assets/([^/]+)");
  try {
    Reply r;
    std::smatch m;
    if (path == "/healthz") {
      if (method != "GET") return problem(405, "MethodNotAllowed", method + " " + path);
      r.body = {{"status", "ok"}};
      return r;
    }
    if (path == "/sessions") {
      if (method != "POST") return problem(405, "MethodNotAllowed", method + " " + path);
      r.status = 201;
      r.body = create_session();
      return r;
    }
    if (path == "/templates" && method == "GET") {
      json list = json::array();
      for (const auto& id : assembly::template_ids()) list.push_back({{"id", id}, {"layout", dsl::to_json(assembly::load_template(id))}});
      r.body = {{"templates", list}};
      return r;
    }
    if (path == "/palettes" && method == "GET") {
      json list = json::array();
      for (const auto& name : stylization::preset_names()) {
        json item = {{"name", name}};
        for (auto kind : enum_values<PaletteKind>()) {
          json colors = json::array();
          for (auto c : stylization::preset_palette(name, kind).colors) colors.push_back(to_hex(c));
          item[to_lower(enum_name(kind))] = colors;
        }
        list.push_back(item);
      }
      r.body = {{"palettes", list}};
      return r;
    }
    if (std::regex_match(path, m, session_route)) {
      const auto id = m[1].str();
      const auto action = m[2].str();
      const bool get = action == "history";
      if ((method == "GET") != get || (method != "GET" && method != "POST")) {
        return problem(405, "MethodNotAllowed", method + " " + path);
      }
      if (!store_.exists(id)) throw SessionNotFound("no session '" + id + "'");
      if (action == "history") {
        r.body = history(id);
      } else if (action == "messages") {
        const auto j = parse_body(body);
        if (!j.contains("text") || !j["text"].is_string()) {
          throw ValidationError({{"schema", "text", "message body needs a 'text' string"}});
        }
        r.body = post_message(id, j["text"].get<std::string>(), j.value("quick_action", false));
      } else if (action == "actions") {
        r.body = apply_quick_action(id, parse_body(body));
      } else {
        const auto j = parse_body(body);
        std::optional<std::string> summary;
        if (j.contains("summary") && j["summary"].is_string()) summary = j["summary"].get<std::string>();
        r.body = accept(id, summary);
      }
      return r;
    }
    if (std::regex_match(path, m, asset_route)) {
      if (method != "GET") return problem(405, "MethodNotAllowed", method + " " + path);
      const auto name = m[1].str();
      auto bytes = store_.read_asset(name);
      if (!bytes) return problem(404, "NotFound", "no asset '" + name + "'");
      r.raw = std::move(*bytes);
      r.content_type = name.ends_with(".svg") ? "image/svg+xml" : "application/json";
      return r;
    }
    return problem(404, "NotFound", "no route for " + method + " " + path);
  } catch (const std::exception& e) {
    return error_reply(e);
  }
}

// --- replay ---------------------------------------------------------------------------

std::vector<ReplayStep> replay_session(const fs::path& log_file, const provider::Provider& provider,
                                       const ServiceConfig& config) {
  const auto log = SessionStore::parse_log(read_bytes(log_file));
  std::vector<ReplayStep> steps;
  SessionLog so_far{log.id, log.created, log.seed, {}};
  std::optional<DashboardSpec> current;
  for (const auto& e : log.entries) {
    ReplayStep step{e.id, e.prototype_id, ""};
    try {
      auto in = input_for(e.request);
      in.current = current;
      in.context = conversation(so_far, config.context_turns);
      auto options = config.pipeline;
      options.seed = interaction_seed(so_far, so_far.entries.size() + 1);
      auto outcome = run_pipeline(in, provider, nullptr, options);
      step.reproduced = spec_digest(outcome.spec);
      current = outcome.spec;
    } catch (const std::exception& ex) {
      step.reproduced = std::string("error: ") + ex.what();
    }
    steps.push_back(step);
    so_far.entries.push_back(e);
  }
  return steps;
}

}  // namespace dashgen::service
