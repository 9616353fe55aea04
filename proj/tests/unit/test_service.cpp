#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <sstream>
#include <regex>
#include <thread>
#include <unistd.h>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/dsl/dsl.hpp"
#include "dashgen/service/http_server.hpp"
#include "dashgen/service/service.hpp"
#include "httplib.h"
#include "support/fixtures.hpp"

using namespace dashgen;
using namespace dashgen::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("dashgen-svc-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::shared_ptr<provider::Provider> mock() {
  return provider::Provider::mock(provider::MockFixture::load("bundled"));
}

std::shared_ptr<Service> make_service(const fs::path& dir, std::shared_ptr<provider::Provider> p = mock()) {
  ServiceConfig c;
  c.data_dir = dir;
  auto kb = knowledge::KnowledgeBase::open(p, dir / "knowledge.json");
  return std::make_shared<Service>(c, p, kb);
}

json call(Service& s, const std::string& method, const std::string& path, const json& body = json::object(),
          int expect = 200) {
  const auto r = s.dispatch(method, path, body.dump());
  INFO(method << " " << path << " -> " << r.text());
  CHECK(r.status == expect);
  return r.body;
}

std::string session_of(Service& s) { return call(s, "POST", "/sessions", {}, 201)["session_id"]; }

const std::string kTobacco = "Build a dashboard to monitor the tobacco supply chain";
const std::string kPie = "Add a pie chart showing product category distribution";
const std::string kWarmer = "Make the style warmer";

}  // namespace

TEST_CASE("tobacco request yields a multi-view prototype with a map") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  const auto r = call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  const auto spec = dsl::spec_from_json(r["spec"]);
  CHECK(spec.views.size() >= 3);
  bool has_map = false;
  for (const auto& v : spec.views)
    for (const auto& c : v.charts) has_map = has_map || c.chart_type == ChartType::Map;
  CHECK(has_map);
  CHECK(r["verdict"]["passed"] == true);
  CHECK(r["entry"]["interaction_method"] == "TextMessage");
  CHECK(r["prototype"]["width"] == 1920);
  CHECK(r["tags"].size() == 3);
}

TEST_CASE("follow-up pie is appended and earlier views keep their content") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  const auto first = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}})["spec"]);
  const auto second = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kPie}})["spec"]);
  REQUIRE(second.views.size() == first.views.size() + 1);
  for (std::size_t i = 0; i < first.views.size(); ++i) {
    CHECK(second.views[i].id == first.views[i].id);
    CHECK(second.views[i].title == first.views[i].title);
    CHECK(second.views[i].charts == first.views[i].charts);
  }
  CHECK(second.views.back().charts.front().chart_type == ChartType::Pie);
}

TEST_CASE("quick actions change only their own facet") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  const auto base = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}})["spec"]);

  const auto styled = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/actions",
                                          {{"action", "ModifyStyle"}, {"palette", "crimson-steel"}})["spec"]);
  CHECK(styled.views == base.views);
  CHECK(styled.layout == base.layout);
  CHECK(styled.style.palette.name == "crimson-steel");

  const auto r = call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyLayout"}, {"template", "template_2"}});
  const auto laid = dsl::spec_from_json(r["spec"]);
  CHECK(laid.views == styled.views);
  CHECK(laid.style == styled.style);
  CHECK(r["entry"]["interaction_method"] == "LayoutSelection");
}

TEST_CASE("warmer style request switches to a warm palette and keeps views") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  const auto base = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}})["spec"]);
  const auto warm = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kWarmer}})["spec"]);
  CHECK(warm.views == base.views);
  CHECK(warm.style.palette.name == "amber-alert");
}

TEST_CASE("error mapping") {
  TempDir dir;
  auto svc = make_service(dir.path);
  CHECK(call(*svc, "POST", "/sessions/s999999/messages", {{"text", kTobacco}}, 404)["error"] == "SessionNotFound");
  CHECK(call(*svc, "GET", "/sessions/nonsense/history", {}, 404)["error"] == "SessionNotFound");
  const auto sid = session_of(*svc);
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyLayout"}, {"template", "template_2"}}, 409)["error"] ==
        "NoCurrentSpec");
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", "  "}}, 400)["error"] == "EmptyInput");
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"nope", 1}}, 400)["error"] == "ValidationError");
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyLayout"}, {"template", "template_99"}}, 400)["error"] ==
        "UnknownTemplate");
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyStyle"}, {"palette", "mauve"}}, 400)["error"] ==
        "UnknownTemplate");
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "Explode"}}, 400)["error"] == "ValidationError");
  CHECK(call(*svc, "DELETE", "/sessions", {}, 405)["error"] == "MethodNotAllowed");
  CHECK(call(*svc, "GET", "/nowhere", {}, 404)["error"] == "NotFound");
  CHECK(svc->dispatch("GET", "/assets/0000000000000000.svg", "").status == 404);
  CHECK(svc->dispatch("GET", "/assets/../../etc/passwd", "").status == 404);
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}}, 422)["error"] == "TooManyViews");
  // failed requests leave no history behind
  CHECK(call(*svc, "GET", "/sessions/" + sid + "/history")["entries"].size() == 2);
}

TEST_CASE("unparsable intent maps to 422") {
  TempDir dir;
  auto bad = provider::Provider::mock(provider::MockFixture::from_json(
      json{{"rules", json::array({{{"stage", "intent"}, {"response", "not json"}}, {{"response", "{}"}}})}}));
  auto svc = make_service(dir.path, bad);
  const auto sid = session_of(*svc);
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}}, 422)["error"] == "UnparsableIntent");
}

TEST_CASE("history has one entry per interaction with non-decreasing timestamps") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kPie}});
  call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyStyle"}, {"palette", "forest"}});
  const auto h = call(*svc, "GET", "/sessions/" + sid + "/history");
  REQUIRE(h["entries"].size() == 3);
  std::string last;
  for (const auto& e : h["entries"]) {
    const auto ts = e["timestamp"].get<std::string>();
    CHECK(ts >= last);
    CHECK(std::regex_match(ts, std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\d\.\d{3}Z)")));
    last = ts;
    for (const char* key : {"id", "interaction_method", "modification_summary", "prototype_id", "thumbnail_url"})
      CHECK(e.contains(key));
  }
  CHECK(h["entries"][1]["modification_summary"].get<std::string>().find("Pie") != std::string::npos);
  CHECK(h["entries"][2]["interaction_method"] == "StyleSelection");
}

TEST_CASE("system clock keeps timestamps strictly increasing") {
  TempDir dir;
  ServiceConfig c;
  c.data_dir = dir.path;
  c.clock = ClockMode::System;
  Service svc(c, mock(), nullptr);
  const auto sid = svc.create_session()["session_id"].get<std::string>();
  for (const auto& text : {kTobacco, kPie, kWarmer}) svc.post_message(sid, text);
  const auto h = svc.history(sid)["entries"];
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i]["timestamp"].get<std::string>() > h[i - 1]["timestamp"].get<std::string>());
}

TEST_CASE("session log round-trips and tolerates a torn tail") {
  TempDir dir;
  SessionStore store(dir.path);
  const auto id = store.create("2025-01-01T00:00:00.000Z", 7);
  CHECK(id == "s000001");
  CHECK(store.create("2025-01-01T00:00:00.000Z", 7) == "s000002");
  HistoryEntry e;
  e.id = "e0001";
  e.method = InteractionMethod::ContentEdit;
  e.summary = "Retitled \"x\"";
  e.timestamp = "2025-01-01T00:00:01.000Z";
  e.prototype_id = "0123456789abcdef";
  e.asset_hash = "00000000000000aa";
  e.thumbnail_hash = "00000000000000bb";
  e.request = {{"type", "action"}, {"action", {{"action", "ModifyStyle"}, {"palette", "forest"}}}};
  e.task_summaries = {"ModifyStyle: palette forest"};
  store.append(id, e);
  auto log = store.load(id);
  REQUIRE(log.entries.size() == 1);
  CHECK(log.seed == 7);
  CHECK(SessionStore::entry_record(log.entries[0]) == SessionStore::entry_record(e));

  {
    std::ofstream out(dir.path / "sessions" / (id + ".jsonl"), std::ios::app);
    out << R"({"type":"entry","id":"e0002","interac)";
  }
  CHECK(store.load(id).entries.size() == 1);
  CHECK_THROWS_AS(store.load("s000009"), SessionNotFound);
  CHECK_THROWS_AS(store.load("../x"), SessionNotFound);

  const auto h = store.put_asset("<svg/>", ".svg");
  CHECK(h == hex_digest(fnv1a64("<svg/>")));
  CHECK(store.read_asset(h + ".svg") == std::optional<std::string>("<svg/>"));
  CHECK_FALSE(store.read_asset(h + ".txt"));
}

TEST_CASE("restart restores history and current spec") {
  TempDir dir;
  std::string sid;
  json before;
  std::optional<DashboardSpec> spec;
  {
    auto svc = make_service(dir.path);
    sid = session_of(*svc);
    call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
    call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyLayout"}, {"template", "template_3"}});
    before = call(*svc, "GET", "/sessions/" + sid + "/history");
    spec = svc->current_spec(sid);
  }
  auto svc = make_service(dir.path);
  CHECK(call(*svc, "GET", "/sessions/" + sid + "/history") == before);
  CHECK(svc->current_spec(sid) == spec);
  // continuing after restart works on the restored spec
  const auto next = dsl::spec_from_json(call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kPie}})["spec"]);
  CHECK(next.views.size() == spec->views.size() + 1);
  CHECK(session_of(*svc) != sid);
}

TEST_CASE("accepting a prototype grows the knowledge base") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  CHECK(call(*svc, "POST", "/sessions/" + sid + "/accept", {}, 409)["error"] == "NoCurrentSpec");
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  const auto r1 = call(*svc, "POST", "/sessions/" + sid + "/accept", {{"summary", "tobacco monitoring board"}});
  const auto r2 = call(*svc, "POST", "/sessions/" + sid + "/accept", {});
  CHECK(r2["knowledge_size"].get<int>() == r1["knowledge_size"].get<int>() + 1);
  CHECK(r1["doc_id"] != r2["doc_id"]);
}

TEST_CASE("replaying a session log reproduces every prototype") {
  TempDir dir;
  auto svc = make_service(dir.path);
  const auto sid = session_of(*svc);
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  call(*svc, "POST", "/sessions/" + sid + "/messages", {{"text", kPie}});
  call(*svc, "POST", "/sessions/" + sid + "/actions", {{"action", "ModifyStyle"}, {"palette", "neon-grid"}});
  ServiceConfig c;
  const auto steps = replay_session(dir.path / "sessions" / (sid + ".jsonl"), *mock(), c);
  REQUIRE(steps.size() == 3);
  for (const auto& s : steps) CHECK_MESSAGE(s.ok(), s.entry_id << ": " << s.recorded << " vs " << s.reproduced);
}

TEST_CASE("golden transcript") {
  TempDir dir;
  auto svc = make_service(dir.path);
  std::ostringstream transcript;
  auto step = [&](const std::string& method, const std::string& path, const json& body) {
    const auto r = svc->dispatch(method, path, body.dump());
    transcript << method << ' ' << path << ' ' << r.status << ' ' << hex_digest(fnv1a64(r.text()));
    if (r.body.contains("entry")) transcript << ' ' << r.body["entry"]["modification_summary"].get<std::string>();
    transcript << '\n';
    return r.body;
  };
  const auto sid = step("POST", "/sessions", {})["session_id"].get<std::string>();
  step("POST", "/sessions/" + sid + "/messages", {{"text", kTobacco}});
  step("POST", "/sessions/" + sid + "/messages", {{"text", kPie}});
  step("POST", "/sessions/" + sid + "/messages", {{"text", kWarmer}});
  step("POST", "/sessions/" + sid + "/actions", {{"action", "ModifyLayout"}, {"template", "template_2"}});
  const auto history = step("GET", "/sessions/" + sid + "/history", {});

  const auto name = "service_transcript.txt";
  if (test::update_golden()) test::write_file(test::fixture_path(name), transcript.str());
  CHECK(transcript.str() == test::read_fixture(name));

  auto restarted = make_service(dir.path);
  CHECK(restarted->dispatch("GET", "/sessions/" + sid + "/history", "").body == history);
}

TEST_CASE("HTTP front end serves the API and thumbnails") {
  TempDir dir;
  auto svc = make_service(dir.path);
  ServerOptions opts;
  opts.host = "127.0.0.1";
  opts.port = 0;
  HttpServer server(svc, opts);
  const int port = server.bind();
  std::thread th([&] { server.listen(); });

  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  auto created = cli.Post("/sessions", "", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto sid = json::parse(created->body)["session_id"].get<std::string>();
  auto msg = cli.Post(("/sessions/" + sid + "/messages").c_str(), json{{"text", kTobacco}}.dump(), "application/json");
  REQUIRE(msg);
  CHECK(msg->status == 200);
  const auto body = json::parse(msg->body);
  auto thumb = cli.Get(body["thumbnail_url"].get<std::string>().c_str());
  REQUIRE(thumb);
  CHECK(thumb->status == 200);
  CHECK(thumb->get_header_value("Content-Type") == "image/svg+xml");
  CHECK(thumb->body.rfind("<svg", 0) == 0);
  auto proto = cli.Get(body["prototype"]["url"].get<std::string>().c_str());
  REQUIRE(proto);
  CHECK(hex_digest(fnv1a64(proto->body)) == body["prototype"]["content_hash"]);
  auto missing = cli.Get("/sessions/s123456/history");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto templates = cli.Get("/templates");
  REQUIRE(templates);
  CHECK(json::parse(templates->body)["templates"].size() == 4);

  server.stop();
  th.join();
}
