#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cantor/domain.hpp"
#include "cantor/errors.hpp"

namespace cantor {

struct BackendRequest {
  std::string model_id;
  std::string text;
  std::optional<ImageRef> image;
  SamplingParams sampling;
};

enum class ResponseSource { Live, Cache, Replay, Mock };

std::string_view to_string(ResponseSource s);
std::optional<ResponseSource> parse_response_source(std::string_view s);

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct BackendResponse {
  std::string text;  // non-empty on success
  std::optional<TokenUsage> usage;
  long latency_ms = 0;
  ResponseSource source = ResponseSource::Mock;
};

// Deterministic digest of (model_id, prompt digest, image digest, sampling).
// Stable across platforms and process restarts; cache and transcript key.
std::string request_cache_key(const BackendRequest& request);

class Backend {
 public:
  virtual ~Backend() = default;

  // Throws BackendError on failure. Implementations must be safe to call
  // from many workers concurrently.
  virtual BackendResponse complete(const BackendRequest& request) = 0;

  virtual bool multimodal() const = 0;
  virtual std::string name() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

// Throws BackendError{modality_mismatch} when the request carries an image
// but the backend is text-only. Every implementation calls this first.
void ensure_modality(const Backend& backend, const BackendRequest& request);

// Scripted in-process backend. Responses are produced, in priority order,
// by: an exact cache-key script entry, the first matching substring rule,
// then the default responder. Keeps a thread-safe call log.
class MockBackend : public Backend {
 public:
  using Responder = std::function<std::string(const BackendRequest&)>;

  explicit MockBackend(Responder default_responder, bool multimodal = true,
                       std::string model_id = "mock");

  static std::shared_ptr<MockBackend> constant(std::string response,
                                               bool multimodal = true);

  void script_exact(std::string cache_key, std::string response);
  void script_contains(std::string needle, Responder responder);
  void script_contains(std::string needle, std::string response);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return multimodal_; }
  std::string name() const override { return "mock:" + model_id_; }

  std::vector<BackendRequest> calls() const;
  int call_count() const;

 private:
  Responder default_responder_;
  bool multimodal_;
  std::string model_id_;
  std::vector<std::pair<std::string, std::string>> exact_;
  std::vector<std::pair<std::string, Responder>> rules_;
  mutable std::mutex mutex_;
  std::vector<BackendRequest> calls_;
};

// Retries transient failures with exponential backoff, then rethrows.
// Total attempts are bounded by max_attempts.
class RetryBackend : public Backend {
 public:
  RetryBackend(BackendPtr inner, int max_attempts, long base_delay_ms = 50,
               double multiplier = 2.0);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return inner_->multimodal(); }
  std::string name() const override { return inner_->name(); }

 private:
  BackendPtr inner_;
  int max_attempts_;
  long base_delay_ms_;
  double multiplier_;
};

// Caps concurrent in-flight requests per binding (bucket of permits;
// default binding configuration is one request in flight).
class RateLimitBackend : public Backend {
 public:
  RateLimitBackend(BackendPtr inner, int max_in_flight);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return inner_->multimodal(); }
  std::string name() const override { return inner_->name(); }

 private:
  struct State;
  BackendPtr inner_;
  std::shared_ptr<State> state_;
};

// Counts completed calls; used to audit "zero live calls" in replay runs.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(BackendPtr inner);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return inner_->multimodal(); }
  std::string name() const override { return inner_->name(); }
  long count() const { return count_->load(); }

 private:
  BackendPtr inner_;
  std::shared_ptr<std::atomic<long>> count_;
};

}  // namespace cantor
