#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dashgen::provider {

enum class Mode { Live, Mock };

/// Connection settings for a completion/embedding backend.
struct ProviderConfig {
  Mode mode = Mode::Mock;
  std::string base_url;      // Live: e.g. "https://api.example.com/v1"
  std::string model;         // Live: chat model name
  std::string embed_model;   // Live: embedding model name (defaults to `model`)
  std::string api_key;       // Live: bearer credential
  std::string fixture_path;  // Mock: file path, or "bundled" for the shipped fixture
  int retry_budget = 2;      // total attempts per call
  std::chrono::milliseconds timeout{30'000};
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  std::size_t embed_dimension = 256;

  /// Reads PROVIDER_MODE, PROVIDER_BASE_URL, PROVIDER_API_KEY,
  /// PROVIDER_MODEL, PROVIDER_FIXTURES (and optionally PROVIDER_EMBED_MODEL,
  /// PROVIDER_EMBED_DIM). Unset mode means mock with the bundled fixture.
  static ProviderConfig from_env();

  /// Live requires endpoint + credentials; Mock requires a fixture path.
  /// Throws ConfigError.
  void validate() const;
};

/// One completion request. `stage` names the pipeline step asking
/// (intent, decompose, palette, ...) and is written as the first line of
/// the system prompt.
struct Prompt {
  std::string stage;
  std::string system;
  std::string user;
  std::vector<std::string> context_docs;
};

/// System prompt actually sent: stage header, instructions, then retrieved
/// context documents under a delimited section.
std::string compose_system_prompt(const Prompt& prompt);

// --- Mock fixtures ---------------------------------------------------------

struct MockRule {
  enum class Match { Any, Exact, Contains, Pattern };

  std::optional<std::string> stage;  // restricts the rule to one stage
  Match match = Match::Any;
  std::string text;                  // exact text, substring, or ECMAScript regex
  std::string response;

  bool matches(const Prompt& prompt) const;
};

/// Ordered rules; the first whose matcher accepts the user prompt wins.
/// A catch-all rule (no stage, match Any) is mandatory.
struct MockFixture {
  std::vector<MockRule> rules;
  std::string embed_mode = "hash-256";

  static MockFixture from_json(const nlohmann::json& j);
  static MockFixture load(const std::string& path);
  const MockRule& resolve(const Prompt& prompt) const;
};

/// Token-hashing embedder: lower-cased alphanumeric tokens are hashed
/// (FNV-1a) into `dimension` buckets and counted; the count vector is
/// L2-normalised. Throws EmptyInput when the text has no tokens.
std::vector<double> hash_embedding(std::string_view text, std::size_t dimension = 256);

// --- Transport ----------------------------------------------------------------

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Single HTTP POST round-trip. Implementations throw TransportFailure on
/// connection problems and timeouts.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::map<std::string, std::string>& headers) = 0;
};

class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// cpp-httplib backed transport for `base_url` (scheme://host[:port][/prefix]).
std::unique_ptr<Transport> make_http_transport(const std::string& base_url,
                                               std::chrono::milliseconds timeout);

// --- Provider -------------------------------------------------------------------

/// Uniform gateway to completion and embedding backends. Shareable across
/// threads; each call keeps only local state.
class Provider {
 public:
  /// Builds from configuration; Live mode gets an HTTP transport.
  static std::shared_ptr<Provider> create(const ProviderConfig& config);
  static std::shared_ptr<Provider> mock(MockFixture fixture);
  /// Live mode over an injected transport (used by tests).
  static std::shared_ptr<Provider> live(const ProviderConfig& config,
                                        std::shared_ptr<Transport> transport);

  Mode mode() const { return config_.mode; }
  const ProviderConfig& config() const { return config_; }

  /// Throws ProviderError.
  std::string complete(const Prompt& prompt) const;

  /// Raw backend vector (mock: unit-norm hash embedding). Throws
  /// ProviderError, EmptyInput.
  std::vector<double> embed(std::string_view text) const;

  std::size_t embedding_dimension() const { return config_.embed_dimension; }

  /// Number of completion calls served so far.
  std::size_t completion_calls() const { return completion_calls_.load(); }
  std::size_t embedding_calls() const { return embedding_calls_.load(); }

 private:
  Provider(ProviderConfig config, std::optional<MockFixture> fixture,
           std::shared_ptr<Transport> transport);

  HttpResponse post_with_retry(const std::string& path, const nlohmann::json& body) const;

  ProviderConfig config_;
  std::optional<MockFixture> fixture_;
  std::shared_ptr<Transport> transport_;
  mutable std::atomic<std::size_t> completion_calls_{0};
  mutable std::atomic<std::size_t> embedding_calls_{0};
};

using ProviderHandle = std::shared_ptr<const Provider>;

}  // namespace dashgen::provider
