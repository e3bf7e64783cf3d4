#include "cantor/http_backend.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cantor/util/base64.hpp"
#include "cantor/util/fs.hpp"
#include "cantor/util/text.hpp"

namespace cantor {

using nlohmann::json;

namespace {

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string env_or(const std::string& name, const std::string& fallback) {
  const char* v = std::getenv(name.c_str());
  return v && *v ? v : fallback;
}

std::string default_base_url(const std::string& provider) {
  if (provider == "openai") return "https://api.openai.com";
  if (provider == "gemini") return "https://generativelanguage.googleapis.com";
  return "";
}

std::string encode_image(const ImageRef& image) {
  try {
    return base64_encode(read_file(image.path));
  } catch (const DataError& err) {
    throw BackendError(BackendError::Kind::Permanent,
                       std::string("cannot load image payload: ") + err.what());
  }
}

BackendError status_error(int status, const std::string& body) {
  auto kind = (status == 429 || status >= 500)
                  ? BackendError::Kind::Transient
                  : BackendError::Kind::Permanent;
  return BackendError(kind, "http status " + std::to_string(status) + ": " +
                                body.substr(0, 300));
}

}  // namespace

std::string api_key_env_name(const std::string& provider) {
  return "CANTOR_API_KEY_" + upper(provider);
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)) {
  if (options_.base_url.empty()) {
    options_.base_url = env_or("CANTOR_BASE_URL_" + upper(options_.provider),
                               default_base_url(options_.provider));
  }
  if (options_.api_key.empty()) {
    options_.api_key = env_or(api_key_env_name(options_.provider), "");
  }
}

BackendResponse HttpBackend::complete(const BackendRequest& request) {
  ensure_modality(*this, request);
  if (options_.api_key.empty()) {
    throw BackendError(BackendError::Kind::Permanent,
                       "no API key; set " + api_key_env_name(options_.provider));
  }

  httplib::Client client(options_.base_url);
  client.set_connection_timeout(options_.timeout_sec);
  client.set_read_timeout(options_.timeout_sec);

  std::string path;
  json body;
  httplib::Headers headers;

  if (options_.provider == "gemini") {
    path = "/v1beta/models/" + options_.model_id + ":generateContent";
    headers = {{"x-goog-api-key", options_.api_key}};
    json parts = json::array({json{{"text", request.text}}});
    if (request.image) {
      parts.push_back(json{{"inline_data",
                            json{{"mime_type", request.image->media_type},
                                 {"data", encode_image(*request.image)}}}});
    }
    body = json{{"contents", json::array({json{{"parts", parts}}})},
                {"generationConfig",
                 json{{"temperature", request.sampling.temperature},
                      {"maxOutputTokens", request.sampling.max_tokens}}}};
  } else {
    // OpenAI-compatible chat completions.
    path = "/v1/chat/completions";
    headers = {{"Authorization", "Bearer " + options_.api_key}};
    json content;
    if (request.image) {
      content = json::array(
          {json{{"type", "text"}, {"text", request.text}},
           json{{"type", "image_url"},
                {"image_url",
                 json{{"url", "data:" + request.image->media_type + ";base64," +
                                  encode_image(*request.image)}}}}});
    } else {
      content = request.text;
    }
    body = json{{"model", options_.model_id},
                {"messages", json::array({json{{"role", "user"},
                                               {"content", content}}})},
                {"temperature", request.sampling.temperature},
                {"max_tokens", request.sampling.max_tokens}};
    if (request.sampling.seed) body["seed"] = *request.sampling.seed;
  }

  auto start = std::chrono::steady_clock::now();
  httplib::Result result = client.Post(path, headers, body.dump(), "application/json");
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();

  if (!result) {
    throw BackendError(BackendError::Kind::Transient,
                       "connection failure: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw status_error(result->status, result->body);
  }

  json parsed = json::parse(result->body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    throw BackendError(BackendError::Kind::Permanent,
                       "unparseable response body");
  }

  BackendResponse response;
  response.source = ResponseSource::Live;
  response.latency_ms = static_cast<long>(elapsed);

  if (options_.provider == "gemini") {
    for (const auto& part :
         parsed.value("candidates", json::array())
             .value(0, json::object())
             .value("content", json::object())
             .value("parts", json::array())) {
      response.text += part.value("text", "");
    }
    if (parsed.contains("usageMetadata")) {
      TokenUsage usage;
      usage.prompt_tokens = parsed["usageMetadata"].value("promptTokenCount", 0);
      usage.completion_tokens =
          parsed["usageMetadata"].value("candidatesTokenCount", 0);
      response.usage = usage;
    }
  } else {
    response.text = parsed.value("choices", json::array())
                        .value(0, json::object())
                        .value("message", json::object())
                        .value("content", "");
    if (parsed.contains("usage")) {
      TokenUsage usage;
      usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
      usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
      response.usage = usage;
    }
  }

  if (response.text.empty()) {
    throw BackendError(BackendError::Kind::Permanent,
                       "provider returned an empty completion");
  }
  return response;
}

// ---------------- stack assembly ----------------

BackendPtr build_backend_stack(const BackendBinding& binding,
                               const RunConfig& config,
                               TranscriptMode transcript_mode,
                               const std::filesystem::path& transcript_path,
                               std::shared_ptr<TranscriptWriter> writer,
                               std::shared_ptr<ResponseCache> cache,
                               BackendPtr base) {
  if (transcript_mode == TranscriptMode::Replay) {
    return std::make_shared<ReplayBackend>(transcript_path, binding.multimodal);
  }

  BackendPtr backend = std::move(base);
  bool live = false;
  if (!backend) {
    if (binding.provider == "mock") {
      backend = builtin_mock_backend(binding);
    } else if (binding.provider == "openai" || binding.provider == "gemini") {
      HttpBackendOptions options;
      options.provider = binding.provider;
      options.model_id = binding.model_id;
      options.multimodal = binding.multimodal;
      options.base_url = binding.base_url;
      backend = std::make_shared<HttpBackend>(std::move(options));
      live = true;
    } else {
      throw ConfigError("unknown backend provider: " + binding.provider);
    }
  }
  if (live) {
    backend = std::make_shared<RetryBackend>(backend, config.max_retry_attempts);
    backend = std::make_shared<RateLimitBackend>(backend, config.max_in_flight);
  }
  if (config.cache.enabled && cache) {
    backend = std::make_shared<CachingBackend>(backend, cache);
  }
  if (transcript_mode == TranscriptMode::Record && writer) {
    backend = std::make_shared<RecordingBackend>(backend, writer);
  }
  return backend;
}

// ---------------- built-in mock provider ----------------

std::shared_ptr<MockBackend> builtin_mock_backend(const BackendBinding& binding) {
  auto responder = [](const BackendRequest& request) -> std::string {
    const std::string& text = request.text;
    auto contains = [&](std::string_view needle) {
      return text.find(needle) != std::string::npos;
    };

    if (contains("Assign specific tasks to each module")) {
      // Decision stage: pick the first module whose description block is
      // present in the prompt, so disabled modules are never referenced.
      ExpertModule chosen = ExpertModule::VisionIQAnalyst;
      static const std::pair<const char*, ExpertModule> probes[] = {
          {"TextIntel Extract: This module", ExpertModule::TextIntelExtractor},
          {"ObjectQuant Locator: This module", ExpertModule::ObjectQuantLocator},
          {"VisionIQ Analyst: This module", ExpertModule::VisionIQAnalyst},
          {"ChartSense Expert: This module", ExpertModule::ChartSenseExpert},
      };
      for (const auto& [needle, module] : probes) {
        if (contains(needle)) {
          chosen = module;
          break;
        }
      }
      std::string name(display_name(chosen));
      return "Principle Analysis:\nThe question can be answered from the "
             "provided input after gathering one key fact.\n\n"
             "Module Selection & Reason:\n" + name +
             ": Selected to gather the key fact for this question.\n\n"
             "Task Allocation:\n[" + name +
             ": Describe the details relevant to the question.]";
    }
    if (contains("information integration science expert") ||
        contains("think step by step")) {
      std::string answer =
          contains("Options:") ? "Answer: (A)" : "Answer: 42";
      return "The available information points to one consistent "
             "conclusion.\n" + answer;
    }
    if (contains("detailed title of this image") ||
        contains("short caption for this image")) {
      return "A scene showing the elements the question asks about.";
    }
    return "The requested detail is visible in the image.";
  };
  return std::make_shared<MockBackend>(responder, binding.multimodal,
                                       binding.model_id);
}

}  // namespace cantor
