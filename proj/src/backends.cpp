#include "cantor/backends.hpp"

#include <chrono>
#include <condition_variable>
#include <thread>

#include <nlohmann/json.hpp>

#include "cantor/util/digest.hpp"

namespace cantor {

using nlohmann::json;

std::string_view to_string(ResponseSource s) {
  switch (s) {
    case ResponseSource::Live: return "live";
    case ResponseSource::Cache: return "cache";
    case ResponseSource::Replay: return "replay";
    case ResponseSource::Mock: return "mock";
  }
  return "";
}

std::optional<ResponseSource> parse_response_source(std::string_view s) {
  if (s == "live") return ResponseSource::Live;
  if (s == "cache") return ResponseSource::Cache;
  if (s == "replay") return ResponseSource::Replay;
  if (s == "mock") return ResponseSource::Mock;
  return std::nullopt;
}

std::string request_cache_key(const BackendRequest& request) {
  // nlohmann objects serialize with sorted keys, which pins the byte form.
  json j{{"model_id", request.model_id},
         {"prompt_sha256", sha256_hex(request.text)},
         {"image_sha256", request.image ? json(request.image->sha256) : json(nullptr)},
         {"temperature", request.sampling.temperature},
         {"max_tokens", request.sampling.max_tokens},
         {"seed", request.sampling.seed ? json(*request.sampling.seed) : json(nullptr)}};
  return sha256_hex(j.dump());
}

void ensure_modality(const Backend& backend, const BackendRequest& request) {
  if (request.image && !backend.multimodal()) {
    throw BackendError(BackendError::Kind::ModalityMismatch,
                       "backend " + backend.name() +
                           " is text-only but the request carries an image");
  }
}

// ---------------- MockBackend ----------------

MockBackend::MockBackend(Responder default_responder, bool multimodal,
                         std::string model_id)
    : default_responder_(std::move(default_responder)),
      multimodal_(multimodal),
      model_id_(std::move(model_id)) {}

std::shared_ptr<MockBackend> MockBackend::constant(std::string response,
                                                   bool multimodal) {
  return std::make_shared<MockBackend>(
      [response = std::move(response)](const BackendRequest&) { return response; },
      multimodal);
}

void MockBackend::script_exact(std::string cache_key, std::string response) {
  std::lock_guard lock(mutex_);
  exact_.emplace_back(std::move(cache_key), std::move(response));
}

void MockBackend::script_contains(std::string needle, Responder responder) {
  std::lock_guard lock(mutex_);
  rules_.emplace_back(std::move(needle), std::move(responder));
}

void MockBackend::script_contains(std::string needle, std::string response) {
  script_contains(std::move(needle),
                  [response = std::move(response)](const BackendRequest&) {
                    return response;
                  });
}

BackendResponse MockBackend::complete(const BackendRequest& request) {
  ensure_modality(*this, request);
  Responder responder;
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(request);
    std::string key = request_cache_key(request);
    for (const auto& [k, response] : exact_) {
      if (k == key) {
        responder = [response](const BackendRequest&) { return response; };
        break;
      }
    }
    if (!responder) {
      for (const auto& [needle, rule] : rules_) {
        if (request.text.find(needle) != std::string::npos) {
          responder = rule;
          break;
        }
      }
    }
    if (!responder) responder = default_responder_;
  }
  // Run the responder outside the lock; responders may sleep to exercise
  // ordering under concurrency.
  BackendResponse response;
  response.text = responder(request);
  response.source = ResponseSource::Mock;
  response.latency_ms = 0;
  if (response.text.empty()) {
    throw BackendError(BackendError::Kind::Permanent,
                       "mock backend produced empty response");
  }
  return response;
}

std::vector<BackendRequest> MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

int MockBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(calls_.size());
}

// ---------------- RetryBackend ----------------

RetryBackend::RetryBackend(BackendPtr inner, int max_attempts,
                           long base_delay_ms, double multiplier)
    : inner_(std::move(inner)),
      max_attempts_(max_attempts < 1 ? 1 : max_attempts),
      base_delay_ms_(base_delay_ms),
      multiplier_(multiplier) {}

BackendResponse RetryBackend::complete(const BackendRequest& request) {
  long delay = base_delay_ms_;
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_->complete(request);
    } catch (const BackendError& err) {
      if (err.kind() != BackendError::Kind::Transient ||
          attempt >= max_attempts_) {
        throw;
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    delay = static_cast<long>(static_cast<double>(delay) * multiplier_);
  }
}

// ---------------- RateLimitBackend ----------------

struct RateLimitBackend::State {
  std::mutex mutex;
  std::condition_variable cv;
  int permits;
};

RateLimitBackend::RateLimitBackend(BackendPtr inner, int max_in_flight)
    : inner_(std::move(inner)), state_(std::make_shared<State>()) {
  state_->permits = max_in_flight < 1 ? 1 : max_in_flight;
}

BackendResponse RateLimitBackend::complete(const BackendRequest& request) {
  {
    std::unique_lock lock(state_->mutex);
    state_->cv.wait(lock, [&] { return state_->permits > 0; });
    --state_->permits;
  }
  struct Release {
    std::shared_ptr<State> st;
    ~Release() {
      std::lock_guard lock(st->mutex);
      ++st->permits;
      st->cv.notify_one();
    }
  } release{state_};
  return inner_->complete(request);
}

// ---------------- CountingBackend ----------------

CountingBackend::CountingBackend(BackendPtr inner)
    : inner_(std::move(inner)),
      count_(std::make_shared<std::atomic<long>>(0)) {}

BackendResponse CountingBackend::complete(const BackendRequest& request) {
  BackendResponse response = inner_->complete(request);
  count_->fetch_add(1);
  return response;
}

}  // namespace cantor
