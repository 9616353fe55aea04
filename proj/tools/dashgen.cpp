#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dashgen/common/errors.hpp"
#include "dashgen/common/text.hpp"
#include "dashgen/dsl/dsl.hpp"
#include "dashgen/renderer/renderer.hpp"
#include "dashgen/service/http_server.hpp"
#include "dashgen/service/pipeline.hpp"
#include "dashgen/service/service.hpp"

using namespace dashgen;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

std::shared_ptr<provider::Provider> make_provider(const std::string& mock_fixture) {
  auto config = provider::ProviderConfig::from_env();
  if (!mock_fixture.empty()) {
    config.mode = provider::Mode::Mock;
    config.fixture_path = mock_fixture;
  }
  config.validate();
  return provider::Provider::create(config);
}

service::ClockMode clock_for(const provider::Provider& p) {
  const auto mode = to_lower(env_or("DASHGEN_CLOCK", ""));
  if (mode == "system") return service::ClockMode::System;
  if (mode == "logical") return service::ClockMode::Logical;
  return p.mode() == provider::Mode::Mock ? service::ClockMode::Logical : service::ClockMode::System;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) throw StorageError("cannot write " + p.string());
}

// `<name>.dash.json` -> `<name>.svg`; anything else gets ".svg" appended.
fs::path svg_path_for(const fs::path& out) {
  auto s = out.string();
  for (const std::string ext : {".dash.json", ".json"}) {
    if (s.size() > ext.size() && s.ends_with(ext)) return s.substr(0, s.size() - ext.size()) + ".svg";
  }
  return s + ".svg";
}

int run_gen(const std::string& prompt, const fs::path& out, std::uint64_t seed, const std::string& mock) {
  auto provider = make_provider(mock);
  auto kb = knowledge::KnowledgeBase::open(provider, std::nullopt);
  service::PipelineInput input;
  input.utterance = prompt;
  service::PipelineOptions options;
  options.seed = seed;
  const auto outcome = service::run_pipeline(input, *provider, kb.get(), options);
  const auto proto = renderer::render_dashboard(outcome.spec);
  write_bytes(out, dsl::serialize_spec(outcome.spec));
  write_bytes(svg_path_for(out), proto.document);
  for (const auto& d : outcome.diagnostics) std::cerr << "note: " << d << "\n";
  std::cout << proto.hash_hex() << "\n";
  return 0;
}

service::HttpServer* g_server = nullptr;

int run_serve(int port, const fs::path& data_dir, const std::string& static_dir, const std::string& mock) {
  auto provider = make_provider(mock);
  service::ServiceConfig config;
  config.data_dir = data_dir;
  config.clock = clock_for(*provider);
  fs::create_directories(data_dir);
  auto kb = knowledge::KnowledgeBase::open(provider, data_dir / "knowledge.json");
  auto svc = std::make_shared<service::Service>(config, provider, kb);

  service::ServerOptions options;
  options.port = port;
  if (!static_dir.empty()) options.static_dir = static_dir;
  service::HttpServer server(svc, options);
  const int bound = server.bind();
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "listening on " << options.host << ":" << bound << " (data " << data_dir.string() << ")\n";
  server.listen();
  g_server = nullptr;
  return 0;
}

int run_replay(const fs::path& session_file, const std::string& mock) {
  auto provider = make_provider(mock);
  const auto steps = service::replay_session(session_file, *provider, service::ServiceConfig{});
  int failures = 0;
  for (const auto& s : steps) {
    std::cout << s.entry_id << " " << (s.ok() ? "ok" : "MISMATCH") << " " << s.recorded;
    if (!s.ok()) std::cout << " != " << s.reproduced;
    std::cout << "\n";
    failures += s.ok() ? 0 : 1;
  }
  std::cout << steps.size() - failures << "/" << steps.size() << " entries reproduced\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dashboard prototype generator"};
  app.require_subcommand(1);

  std::string prompt, out, mock, static_dir, session;
  std::uint64_t seed = 42;
  auto* gen = app.add_subcommand("gen", "Generate one prototype from a prompt");
  gen->add_option("--prompt", prompt, "Dashboard request")->required();
  gen->add_option("--out", out, "Canonical spec output; the SVG is written next to it")->required();
  gen->add_option("--seed", seed, "Generation seed");
  gen->add_option("--mock", mock, "Mock fixture file, or 'bundled'");

  int port = std::atoi(env_or("PORT", "8080").c_str());
  std::string data_dir = env_or("DATA_DIR", "dashgen-data");
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--port", port, "Listen port (env PORT)");
  serve->add_option("--data-dir", data_dir, "Session and asset storage (env DATA_DIR)");
  serve->add_option("--static", static_dir, "Directory of web client assets to serve at /");
  serve->add_option("--mock", mock, "Mock fixture file, or 'bundled'");

  auto* replay = app.add_subcommand("replay", "Re-run a session log and compare prototypes");
  replay->add_option("--session", session, "Session log (.jsonl)")->required()->check(CLI::ExistingFile);
  replay->add_option("--mock", mock, "Mock fixture file, or 'bundled'");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(prompt, out, seed, mock);
    if (*serve) return run_serve(port, data_dir, static_dir, mock);
    return run_replay(session, mock);
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
