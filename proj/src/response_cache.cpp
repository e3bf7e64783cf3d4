#include "cantor/response_cache.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cantor/util/fs.hpp"

namespace cantor {

using nlohmann::json;

namespace {

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json response_to_json(const BackendResponse& r) {
  json j{{"text", r.text},
         {"latency_ms", r.latency_ms},
         {"source", std::string(to_string(r.source))}};
  if (r.usage) {
    j["usage"] = json{{"prompt_tokens", r.usage->prompt_tokens},
                      {"completion_tokens", r.usage->completion_tokens}};
  }
  return j;
}

BackendResponse response_from_json(const json& j) {
  BackendResponse r;
  r.text = j.value("text", "");
  r.latency_ms = j.value("latency_ms", 0L);
  if (auto s = parse_response_source(j.value("source", "live"))) r.source = *s;
  if (j.contains("usage")) {
    TokenUsage u;
    u.prompt_tokens = j["usage"].value("prompt_tokens", 0);
    u.completion_tokens = j["usage"].value("completion_tokens", 0);
    r.usage = u;
  }
  return r;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
    for (const auto& line : read_lines(entry.path())) {
      json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.contains("key")) continue;
      index_[j["key"].get<std::string>()] = response_from_json(j.value("response", json::object()));
    }
  }
}

std::filesystem::path ResponseCache::shard_path(const std::string& key) const {
  std::string prefix = key.size() >= 2 ? key.substr(0, 2) : "00";
  return dir_ / (prefix + ".jsonl");
}

std::optional<BackendResponse> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(const std::string& key, const BackendResponse& response) {
  json j{{"key", key},
         {"response", response_to_json(response)},
         {"created_at", now_iso8601()}};
  std::string line = j.dump() + "\n";
  std::lock_guard lock(mutex_);
  // Single O_APPEND write keeps each entry intact under concurrent writers.
  std::ofstream out(shard_path(key), std::ios::binary | std::ios::app);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.flush();
  index_[key] = response;
}

ResponseCache::Stats ResponseCache::stats() const {
  std::lock_guard lock(mutex_);
  Stats s;
  s.entries = index_.size();
  if (std::filesystem::is_directory(dir_)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        ++s.shards;
        s.bytes += entry.file_size();
      }
    }
  }
  return s;
}

void ResponseCache::clear() {
  std::lock_guard lock(mutex_);
  index_.clear();
  if (std::filesystem::is_directory(dir_)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        std::filesystem::remove(entry.path());
      }
    }
  }
}

CachingBackend::CachingBackend(BackendPtr inner,
                               std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

BackendResponse CachingBackend::complete(const BackendRequest& request) {
  std::string key = request_cache_key(request);
  if (auto hit = cache_->lookup(key)) {
    BackendResponse response = *hit;
    response.source = ResponseSource::Cache;
    return response;
  }
  BackendResponse response = inner_->complete(request);
  cache_->store(key, response);
  return response;
}

}  // namespace cantor
