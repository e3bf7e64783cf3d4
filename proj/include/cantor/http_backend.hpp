#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cantor/backends.hpp"
#include "cantor/response_cache.hpp"
#include "cantor/transcript.hpp"

namespace cantor {

// Live HTTP client for OpenAI-compatible chat endpoints and the Gemini
// generateContent API. Auth and endpoint specifics are adapter config; the
// API key comes from CANTOR_API_KEY_<PROVIDER> unless given explicitly.
struct HttpBackendOptions {
  std::string provider;  // "openai" | "gemini"
  std::string model_id;
  bool multimodal = true;
  std::string base_url;  // scheme://host[:port]; default per provider
  std::string api_key;   // empty -> read from environment
  int timeout_sec = 120;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return options_.multimodal; }
  std::string name() const override {
    return options_.provider + ":" + options_.model_id;
  }

 private:
  HttpBackendOptions options_;
};

// Env-var name for a provider's key: CANTOR_API_KEY_OPENAI etc.
std::string api_key_env_name(const std::string& provider);

enum class TranscriptMode { Off, Record, Replay };

// Builds the full middleware stack for one binding:
//   Recording( Caching( RateLimit( Retry( base ))))
// Replay mode substitutes the transcript for the base backend (no retry,
// no live calls). `base` overrides the provider-derived base backend and
// is how tests and the builtin mock provider plug in.
BackendPtr build_backend_stack(const BackendBinding& binding,
                               const RunConfig& config,
                               TranscriptMode transcript_mode,
                               const std::filesystem::path& transcript_path,
                               std::shared_ptr<TranscriptWriter> writer,
                               std::shared_ptr<ResponseCache> cache,
                               BackendPtr base = nullptr);

// Deterministic built-in mock provider used by CLI smoke runs: emits a
// well-formed decision for decision prompts, canned sub-answers for expert
// prompts, and a rationale + "Answer: ..." line for synthesis prompts.
std::shared_ptr<MockBackend> builtin_mock_backend(const BackendBinding& binding);

}  // namespace cantor
