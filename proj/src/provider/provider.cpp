#include "dashgen/provider/provider.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "dashgen/common/errors.hpp"
#include "dashgen/common/random.hpp"
#include "dashgen/common/resources.hpp"
#include "dashgen/common/text.hpp"

namespace dashgen::provider {

using nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

constexpr std::string_view kBundledFixture = "bundled";

}  // namespace

ProviderConfig ProviderConfig::from_env() {
  ProviderConfig c;
  const auto mode = to_lower(env_or("PROVIDER_MODE", "mock"));
  if (mode == "live") {
    c.mode = Mode::Live;
  } else if (mode == "mock") {
    c.mode = Mode::Mock;
  } else {
    throw ConfigError("PROVIDER_MODE must be 'live' or 'mock', got '" + mode + "'");
  }
  c.base_url = env_or("PROVIDER_BASE_URL");
  c.api_key = env_or("PROVIDER_API_KEY");
  c.model = env_or("PROVIDER_MODEL");
  c.embed_model = env_or("PROVIDER_EMBED_MODEL", c.model);
  c.fixture_path = env_or("PROVIDER_FIXTURES", c.mode == Mode::Mock ? std::string(kBundledFixture) : "");
  if (auto dim = env_or("PROVIDER_EMBED_DIM"); !dim.empty()) {
    c.embed_dimension = static_cast<std::size_t>(std::stoul(dim));
  }
  return c;
}

void ProviderConfig::validate() const {
  if (retry_budget < 1) throw ConfigError("retry budget must allow at least one attempt");
  if (mode == Mode::Live) {
    if (base_url.empty()) throw ConfigError("live provider requires PROVIDER_BASE_URL");
    if (api_key.empty()) throw ConfigError("live provider requires PROVIDER_API_KEY");
    if (model.empty()) throw ConfigError("live provider requires PROVIDER_MODEL");
  } else if (fixture_path.empty()) {
    throw ConfigError("mock provider requires a fixture path (PROVIDER_FIXTURES)");
  }
}

std::string compose_system_prompt(const Prompt& prompt) {
  std::string out = "[stage:" + prompt.stage + "]\n" + prompt.system;
  if (!prompt.context_docs.empty()) {
    out += "\n\n=== RETRIEVED KNOWLEDGE BEGIN ===\n";
    for (std::size_t i = 0; i < prompt.context_docs.size(); ++i) {
      if (i > 0) out += "\n---\n";
      out += prompt.context_docs[i];
    }
    out += "\n=== RETRIEVED KNOWLEDGE END ===";
  }
  return out;
}

// --- Mock ------------------------------------------------------------------

bool MockRule::matches(const Prompt& prompt) const {
  if (stage && *stage != prompt.stage) return false;
  switch (match) {
    case Match::Any: return true;
    case Match::Exact: return prompt.user == text;
    case Match::Contains: return prompt.user.find(text) != std::string::npos;
    case Match::Pattern: return std::regex_search(prompt.user, std::regex(text, std::regex::ECMAScript));
  }
  return false;
}

MockFixture MockFixture::from_json(const json& j) {
  MockFixture f;
  if (!j.is_object() || !j.contains("rules") || !j["rules"].is_array()) {
    throw ConfigError("mock fixture needs a 'rules' array");
  }
  f.embed_mode = j.value("embed_mode", std::string("hash-256"));
  if (f.embed_mode != "hash-256") throw ConfigError("unsupported embed_mode '" + f.embed_mode + "'");
  bool catch_all = false;
  for (const auto& jr : j["rules"]) {
    MockRule r;
    if (jr.contains("stage")) r.stage = jr["stage"].get<std::string>();
    int matchers = 0;
    for (const auto& [key, kind] : {std::pair{"exact", MockRule::Match::Exact},
                                    std::pair{"contains", MockRule::Match::Contains},
                                    std::pair{"pattern", MockRule::Match::Pattern}}) {
      if (jr.contains(key)) {
        r.match = kind;
        r.text = jr[key].get<std::string>();
        ++matchers;
      }
    }
    if (matchers > 1) throw ConfigError("a mock rule may use only one matcher");
    if (r.match == MockRule::Match::Pattern) {
      try {
        std::regex probe(r.text, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ConfigError("bad mock pattern '" + r.text + "': " + e.what());
      }
    }
    if (!jr.contains("response")) throw ConfigError("mock rule without 'response'");
    const auto& resp = jr["response"];
    r.response = resp.is_string() ? resp.get<std::string>() : resp.dump();
    catch_all = catch_all || (!r.stage && r.match == MockRule::Match::Any);
    f.rules.push_back(std::move(r));
  }
  if (!catch_all) throw ConfigError("mock fixture has no catch-all rule");
  return f;
}

MockFixture MockFixture::load(const std::string& path) {
  if (path == kBundledFixture) return from_json(resources::json("fixtures/mock.json"));
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read mock fixture '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(json::parse(ss.str()));
  } catch (const json::exception& e) {
    throw ConfigError("mock fixture '" + path + "' is not valid JSON: " + e.what());
  }
}

const MockRule& MockFixture::resolve(const Prompt& prompt) const {
  for (const auto& r : rules) {
    if (r.matches(prompt)) return r;
  }
  // Unreachable for fixtures accepted by from_json.
  throw ConfigError("mock fixture has no catch-all rule");
}

std::vector<double> hash_embedding(std::string_view text, std::size_t dimension) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw EmptyInput("cannot embed text without tokens");
  std::vector<double> v(dimension, 0.0);
  for (const auto& t : tokens) v[fnv1a64(t) % dimension] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// --- Provider ----------------------------------------------------------------

Provider::Provider(ProviderConfig config, std::optional<MockFixture> fixture,
                   std::shared_ptr<Transport> transport)
    : config_(std::move(config)), fixture_(std::move(fixture)), transport_(std::move(transport)) {}

std::shared_ptr<Provider> Provider::create(const ProviderConfig& config) {
  config.validate();
  if (config.mode == Mode::Mock) {
    auto p = mock(MockFixture::load(config.fixture_path));
    p->config_ = config;
    p->config_.embed_dimension = 256;
    return p;
  }
  return live(config, make_http_transport(config.base_url, config.timeout));
}

std::shared_ptr<Provider> Provider::mock(MockFixture fixture) {
  ProviderConfig c;
  c.mode = Mode::Mock;
  c.fixture_path = "<in-memory>";
  c.embed_dimension = 256;
  return std::shared_ptr<Provider>(new Provider(c, std::move(fixture), nullptr));
}

std::shared_ptr<Provider> Provider::live(const ProviderConfig& config,
                                         std::shared_ptr<Transport> transport) {
  auto c = config;
  c.mode = Mode::Live;
  c.validate();
  if (c.embed_model.empty()) c.embed_model = c.model;
  return std::shared_ptr<Provider>(new Provider(c, std::nullopt, std::move(transport)));
}

HttpResponse Provider::post_with_retry(const std::string& path, const json& body) const {
  const std::map<std::string, std::string> headers = {
      {"Authorization", "Bearer " + config_.api_key}, {"Content-Type", "application/json"}};
  const std::string payload = body.dump();
  auto delay = config_.backoff;
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= config_.retry_budget; ++attempt) {
    try {
      auto resp = transport_->post(path, payload, headers);
      if (resp.status >= 200 && resp.status < 300) return resp;
      last_status = resp.status;
      last_error = "HTTP " + std::to_string(resp.status);
      const bool retryable = resp.status == 408 || resp.status == 429 || resp.status >= 500;
      if (!retryable) throw ProviderError("provider rejected request: " + last_error, attempt, resp.status);
    } catch (const TransportFailure& e) {
      last_error = std::string("transport failure: ") + e.what();
      last_status = 0;
    }
    if (attempt < config_.retry_budget && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw ProviderError("provider call failed: " + last_error, config_.retry_budget, last_status);
}

std::string Provider::complete(const Prompt& prompt) const {
  ++completion_calls_;
  if (config_.mode == Mode::Mock) {
    (void)compose_system_prompt(prompt);
    return fixture_->resolve(prompt).response;
  }
  const json body = {{"model", config_.model},
                     {"temperature", 0},
                     {"messages",
                      json::array({{{"role", "system"}, {"content", compose_system_prompt(prompt)}},
                                   {{"role", "user"}, {"content", prompt.user}}})}};
  const auto resp = post_with_retry("/chat/completions", body);
  try {
    const auto j = json::parse(resp.body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed chat completion response: ") + e.what(), 1, resp.status);
  }
}

std::vector<double> Provider::embed(std::string_view text) const {
  ++embedding_calls_;
  if (config_.mode == Mode::Mock) return hash_embedding(text, 256);
  if (tokenize(text).empty()) throw EmptyInput("cannot embed empty text");
  const json body = {{"model", config_.embed_model}, {"input", std::string(text)}};
  const auto resp = post_with_retry("/embeddings", body);
  std::vector<double> v;
  try {
    v = json::parse(resp.body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embedding response: ") + e.what(), 1, resp.status);
  }
  if (v.size() != config_.embed_dimension) {
    throw ProviderError("embedding has dimension " + std::to_string(v.size()) + ", expected " +
                            std::to_string(config_.embed_dimension),
                        1, resp.status);
  }
  return v;
}

}  // namespace dashgen::provider
